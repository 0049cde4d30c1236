#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "test_support.hpp"

using namespace lwssim;
using nlohmann::json;
using test_support::TempDir;

namespace {

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const TempDir& dir, const std::string& args) {
  const auto out_path = dir.file("cli_stdout.txt");
  const auto err_path = dir.file("cli_stderr.txt");
  const std::string cmd = std::string(LWSSIM_CLI_PATH) + " " + args + " > " +
                          out_path.string() + " 2> " + err_path.string();
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::filesystem::path write_noise(const TempDir& dir, const std::string& name,
                                  std::uint64_t seed, int channels = 1, int size = 16) {
  const auto p = dir.file(name);
  save_image(test_support::seeded_image(seed, channels, size, size), p);
  return p;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("compare of a file with itself reports a perfect score") {
  TempDir dir;
  const auto img = write_noise(dir, "a.pgm", 1);
  const CliResult r = run_cli(dir, "compare " + img.string() + " " + img.string());
  REQUIRE(r.status == 0);
  const json rep = json::parse(r.out);
  CHECK(rep["ssim"].get<double>() >= 1.0 - 1e-12);
  CHECK(rep["ssim"].get<double>() <= 1.0);
  CHECK(rep["lwssim"].get<double>() >= 2.0 - 1e-12);
  CHECK(rep["mse"].get<double>() == 0.0);
  CHECK(rep["lwssim_loss"].get<double>() <= 1e-12);
  REQUIRE(rep["levels"].size() == 3);
  CHECK(rep["levels"][0]["xi"].get<int>() == 3);
  CHECK(rep["levels"][2]["xi"].get<int>() == 11);
  REQUIRE(rep["channels"].size() == 1);
}

TEST_CASE("compare aggregates recombine inside the report") {
  TempDir dir;
  const auto a = write_noise(dir, "a.png", 11, 3);
  const auto b = write_noise(dir, "b.png", 12, 3);
  const CliResult r = run_cli(dir, "compare " + a.string() + " " + b.string());
  REQUIRE(r.status == 0);
  const json rep = json::parse(r.out);

  const double lwssim = rep["lwssim"].get<double>();
  CHECK(rep["lwssim_loss"].get<double>() ==
        doctest::Approx(1.0 - lwssim / 2.0).epsilon(1e-12));

  double level_mean = 0.0;
  for (const auto& level : rep["levels"])
    level_mean += level["lambda"].get<double>() * level["score"].get<double>();
  level_mean /= static_cast<double>(rep["levels"].size());
  CHECK(lwssim == doctest::Approx(level_mean).epsilon(1e-9));

  double channel_mean = 0.0;
  for (const auto& ch : rep["channels"]) channel_mean += ch["ssim"].get<double>();
  channel_mean /= static_cast<double>(rep["channels"].size());
  CHECK(rep["ssim"].get<double>() == doctest::Approx(channel_mean).epsilon(1e-9));
}

TEST_CASE("custom level weights are normalized with a warning") {
  TempDir dir;
  const auto a = write_noise(dir, "a.pgm", 21);
  const auto b = write_noise(dir, "b.pgm", 22);
  const CliResult r =
      run_cli(dir, "compare " + a.string() + " " + b.string() + " --levels 3:2,7:2");
  REQUIRE(r.status == 0);
  CHECK(r.err.find("rescaled") != std::string::npos);
  const json rep = json::parse(r.out);
  REQUIRE(rep["levels"].size() == 2);
  CHECK(rep["levels"][0]["xi"].get<int>() == 3);
  CHECK(rep["levels"][0]["lambda"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep["levels"][1]["lambda"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("csv output flattens the same report") {
  TempDir dir;
  const auto a = write_noise(dir, "a.pgm", 31);
  const auto b = write_noise(dir, "b.pgm", 32);
  const CliResult js = run_cli(dir, "compare " + a.string() + " " + b.string());
  const CliResult csv =
      run_cli(dir, "compare " + a.string() + " " + b.string() + " --format csv");
  REQUIRE(js.status == 0);
  REQUIRE(csv.status == 0);
  CHECK(csv.out.rfind("key,value\n", 0) == 0);
  CHECK(csv.out.find("\nssim,") != std::string::npos);
  CHECK(csv.out.find("levels.0.xi,") != std::string::npos);

  const double ssim_json = json::parse(js.out)["ssim"].get<double>();
  std::istringstream lines(csv.out);
  std::string line;
  double ssim_csv = -10.0;
  while (std::getline(lines, line))
    if (line.rfind("ssim,", 0) == 0) ssim_csv = std::stod(line.substr(5));
  CHECK(ssim_csv == doctest::Approx(ssim_json).epsilon(1e-15));
}

TEST_CASE("compare writes the report to --out") {
  TempDir dir;
  const auto a = write_noise(dir, "a.pgm", 41);
  const CliResult r = run_cli(dir, "compare " + a.string() + " " + a.string() +
                                       " --out " + dir.file("rep.json").string());
  REQUIRE(r.status == 0);
  const json rep = json::parse(slurp(dir.file("rep.json")));
  CHECK(rep.contains("ssim"));
  CHECK(rep.contains("mae"));
}

TEST_CASE("bad invocations exit nonzero") {
  TempDir dir;
  const auto a = write_noise(dir, "a.pgm", 51);
  CHECK(run_cli(dir, "compare " + a.string()).status != 0);
  CHECK(run_cli(dir, "compare " + dir.file("none.pgm").string() + " " + a.string()).status !=
        0);
  CHECK(run_cli(dir, "map " + a.string() + " " + a.string()).status != 0);
  CHECK(run_cli(dir, "optimize " + a.string() + " --loss psnr").status != 0);
  CHECK(run_cli(dir, "").status != 0);

  const CliResult r = run_cli(dir, "compare " + dir.file("none.pgm").string() + " " +
                                       a.string());
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("map of identical inputs is uniform white") {
  TempDir dir;
  const auto a = write_noise(dir, "a.pgm", 61);
  const auto out = dir.file("map.png");
  const CliResult r = run_cli(dir, "map " + a.string() + " " + a.string() +
                                       " --which ssim --out " + out.string());
  REQUIRE(r.status == 0);
  CHECK(r.out.find("min=") != std::string::npos);
  CHECK(r.out.find("max=") != std::string::npos);

  const Image m = load_image(out);
  CHECK(m.channels == 1);
  CHECK(m.height == 10);  // 16 - 7 + 1
  CHECK(m.width == 10);
  for (double v : m.data) CHECK(v == 1.0);
}

TEST_CASE("luminance map ignores texture when window means agree") {
  TempDir dir;
  SyntheticSpec flat;
  flat.kind = SyntheticKind::kConstant;
  const auto a = dir.file("flat.pgm");
  save_image(synthesize(flat, 1, 16, 16), a);

  SyntheticSpec check;
  check.kind = SyntheticKind::kCheckerboard;
  check.amplitude = 0.5;
  const auto b = dir.file("check.pgm");
  save_image(synthesize(check, 1, 16, 16), b);

  const auto out = dir.file("lmap.png");
  const CliResult r = run_cli(dir, "map " + a.string() + " " + b.string() +
                                       " --which l --xi 2 --out " + out.string());
  REQUIRE(r.status == 0);
  for (double v : load_image(out).data) CHECK(v == 1.0);
}

TEST_CASE("optimize writes trace, final image, and report") {
  TempDir dir;
  const auto target = write_noise(dir, "t.pgm", 71);
  const std::string prefix = dir.file("run").string();
  const CliResult r = run_cli(dir, "optimize " + target.string() +
                                       " --steps 5 --out " + prefix);
  REQUIRE(r.status == 0);

  const std::string trace = slurp(prefix + "_trace.csv");
  CHECK(trace.rfind("step,loss\n", 0) == 0);
  CHECK(count_lines(trace) == 7);  // header + initial + 5 steps

  const Image final_img = load_image(prefix + "_final.png");
  CHECK(final_img.height == 16);

  const json rep = json::parse(slurp(prefix + "_report.json"));
  CHECK(rep.contains("ssim"));
  CHECK(rep.contains("lwssim_loss"));
}

TEST_CASE("optimize with --init self starts at the fixed point") {
  TempDir dir;
  const auto target = write_noise(dir, "t.pgm", 81);
  const std::string prefix = dir.file("self").string();
  const CliResult r = run_cli(dir, "optimize " + target.string() +
                                       " --steps 0 --init self --out " + prefix);
  REQUIRE(r.status == 0);
  const std::string trace = slurp(prefix + "_trace.csv");
  CHECK(count_lines(trace) == 2);
  std::istringstream lines(trace);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(first.rfind("0,", 0) == 0);
  CHECK(std::abs(std::stod(first.substr(2))) <= 1e-9);
}

TEST_CASE("optimize with a bottleneck produces the same artifact set") {
  TempDir dir;
  const auto target = write_noise(dir, "t.pgm", 91);
  const std::string prefix = dir.file("bn").string();
  const CliResult r = run_cli(dir, "optimize " + target.string() +
                                       " --steps 5 --bottleneck 2 --loss mse --out " +
                                       prefix);
  REQUIRE(r.status == 0);
  CHECK(std::filesystem::exists(prefix + "_trace.csv"));
  CHECK(std::filesystem::exists(prefix + "_final.png"));
  CHECK(std::filesystem::exists(prefix + "_report.json"));
}

TEST_CASE("study prints one csv row per loss") {
  TempDir dir;
  const auto target = write_noise(dir, "t.pgm", 101);
  const std::string args = "study " + target.string() +
                           " --steps 5 --seeds 2 --bottleneck 2 --lr 0.2";
  const CliResult r = run_cli(dir, args);
  REQUIRE(r.status == 0);
  std::istringstream lines(r.out);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "loss,ssim_mean,ssim_sd,mse_mean,mse_sd");
  std::string row;
  std::vector<std::string> names;
  while (std::getline(lines, row))
    if (!row.empty()) names.push_back(row.substr(0, row.find(',')));
  REQUIRE(names.size() == 3);
  CHECK(names[0] == "mse");
  CHECK(names[1] == "ssim");
  CHECK(names[2] == "lwssim");

  const CliResult again = run_cli(dir, args);
  CHECK(again.out == r.out);
}

TEST_CASE("study emits json when asked") {
  TempDir dir;
  const auto target = write_noise(dir, "t.pgm", 111);
  const CliResult r =
      run_cli(dir, "study " + target.string() +
                       " --losses mse,lwssim --steps 5 --seeds 2 --bottleneck 2 "
                       "--format json");
  REQUIRE(r.status == 0);
  const json rows = json::parse(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["loss"].get<std::string>() == "mse");
  CHECK(rows[1]["loss"].get<std::string>() == "lwssim");
  CHECK(rows[1].contains("ssim_mean"));
  CHECK(rows[1].contains("mse_sd"));
}
