// Acceptance checks. Usage:
//   acceptance [--criterion N]... [--prepare case1|case1-repeat] --work <dir> --configs <dir>
// Criteria 6, 7 and 9 read the Case 1 runs made by --prepare.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "pcm/experiments.hpp"
#include "pcm/suites.hpp"

namespace fs = std::filesystem;
using namespace pcm;

namespace {

using Clock = std::chrono::steady_clock;

struct Line {
  int criterion;
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  std::ostringstream o;
  o << v;
  return o.str();
}

std::string suite_detail(const std::vector<SuiteResult>& rs, bool& pass) {
  std::string out;
  pass = !rs.empty();
  for (const auto& r : rs) {
    pass = pass && r.passed;
    out += " " + r.name + "=" + fmt(r.max_error) + (r.passed ? "" : "(FAIL)");
  }
  return out;
}

Line criterion1(const PropsOptions& o) {
  const auto t0 = Clock::now();
  const SuiteResult r = theorem1_suite(o);
  return {1, r.passed && r.cases == 2000,
          "cases=" + std::to_string(r.cases) + " max(f(u*) - grid min)=" + fmt(r.max_error) +
              " tol=1e-6 time=" + fmt(seconds_since(t0)) + "s"};
}

Line criterion2(const GradcheckOptions& o) {
  const auto t0 = Clock::now();
  bool pass;
  const std::string d = suite_detail(network_gradient_suites(o), pass);
  return {2, pass, "tol=1e-5" + d + " time=" + fmt(seconds_since(t0)) + "s"};
}

Line criterion3(const GradcheckOptions& o) {
  bool pass;
  const std::string d = suite_detail(implicit_vjp_suites(o), pass);
  return {3, pass, "tol=1e-3" + d};
}

Line criterion4(const PropsOptions& o) {
  const SuiteResult r = lse_ma_bound_suite(o);
  return {4, r.passed && r.cases == 50000,
          "cases=" + std::to_string(r.cases) + " max violation=" + fmt(r.max_error)};
}

Line criterion5(const PropsOptions& o) {
  bool pass;
  const std::string d = suite_detail(gcm_suites(o), pass);
  return {5, pass, d.substr(1)};
}

std::map<std::string, std::vector<std::string>> metrics_by_model(const fs::path& dir) {
  std::map<std::string, std::vector<std::string>> out;
  const auto rows = read_csv(dir / "metrics.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) out[rows[i][0]] = rows[i];
  return out;
}

Line criterion6(const fs::path& run) {
  const auto m = metrics_by_model(run);
  if (!m.count("eplse") || !m.count("plse")) return {6, false, "eplse or plse metrics missing"};
  const double e_arg = std::stod(m.at("eplse")[1]), e_val = std::stod(m.at("eplse")[2]);
  const double p_val = std::stod(m.at("plse")[2]);
  const bool pass = e_arg <= 0.05 && e_val <= 0.10 && p_val >= 5.0 * e_val;
  std::string time = "?";
  if (fs::exists(run / "wall_seconds.txt")) time = read_text(run / "wall_seconds.txt");
  return {6, pass,
          "eplse minimizer err=" + fmt(e_arg) + " (<=0.05) min-value err=" + fmt(e_val) +
              " (<=0.10) plse min-value err=" + fmt(p_val) + " ratio=" + fmt(p_val / e_val) +
              " (>=5) run time=" + time + "s"};
}

Line criterion7(const fs::path& run) {
  const auto rows = read_csv(run / "bound_eplse.csv");
  if (rows.size() < 2) return {7, false, "bound_eplse.csv empty"};
  const double eps = std::stod(rows[1][0]), excess = std::stod(rows[1][1]);
  return {7, rows[1][5] == "1" && excess <= 1e-3,
          "eps_hat=" + fmt(eps) + " max(f(x,u_hat) - min f - 2 eps_hat)=" + fmt(excess) +
              " tol=1e-3"};
}

Line criterion8(const fs::path& configs, const fs::path& work) {
  const auto t0 = Clock::now();
  RunConfig c = load_run_config((configs / "case2.cfg").string(), Experiment::Case2);
  parse_model_list("eplse,linear-mpc", c);
  const fs::path dir = work / "case2";
  std::ostringstream log;
  const RunOutcome out = run_experiment(c, dir, log);
  std::cerr << log.str();
  if (!fs::exists(dir / "trajectory_eplse.csv")) return {8, false, "no EPLSE trajectory"};
  const auto rows = read_csv(dir / "trajectory_eplse.csv");
  double max_in = 0.0;
  for (std::size_t i = 1; i + 1 < rows.size(); ++i)
    max_in = std::max(max_in, std::abs(std::stod(rows[i][3])));
  const double phi = std::stod(rows.back()[1]), phidot = std::stod(rows.back()[2]);
  const double err = std::abs(phi - c.xd[0] * wingrock::kRadToDeg);
  const bool pass = out.ok() && err <= 2.0 && std::abs(phidot) <= 2.0 && max_in <= 1.75;
  return {8, pass,
          "|phi(tf)-phi_d|=" + fmt(err) + "deg (<=2) |phidot(tf)|=" + fmt(std::abs(phidot)) +
              "deg/s (<=2) max|delta_g|=" + fmt(max_in) + " (<=1.75) time=" +
              fmt(seconds_since(t0)) + "s"};
}

Line criterion9(const fs::path& a, const fs::path& b) {
  std::vector<std::string> files{"dataset.csv"};
  for (const auto& e : fs::directory_iterator(a)) {
    const std::string n = e.path().filename().string();
    if (n.rfind("loss_history_", 0) == 0) files.push_back(n);
  }
  std::string bad;
  for (const auto& f : files)
    if (read_text(a / f) != read_text(b / f)) bad += " " + f;
  // metrics without the wall-time column
  const auto ma = read_csv(a / "metrics.csv"), mb = read_csv(b / "metrics.csv");
  bool metrics_same = ma.size() == mb.size() && ma.size() > 1;
  for (std::size_t i = 0; metrics_same && i < ma.size(); ++i) {
    auto ra = ma[i], rb = mb[i];
    ra.erase(ra.begin() + 3);
    rb.erase(rb.begin() + 3);
    metrics_same = ra == rb;
  }
  if (!metrics_same) bad += " metrics.csv";
  return {9, bad.empty() && files.size() > 1,
          bad.empty() ? "identical: metrics.csv (wall time excluded) and " +
                            std::to_string(files.size()) + " other files"
                      : "differ:" + bad};
}

void prepare_case1(const fs::path& configs, const fs::path& dir) {
  const auto t0 = Clock::now();
  const RunConfig c = load_run_config((configs / "case1.cfg").string(), Experiment::Case1);
  fs::remove_all(dir);
  const RunOutcome out = run_experiment(c, dir, std::cerr);
  std::ofstream(dir / "wall_seconds.txt") << seconds_since(t0);
  for (const auto& f : out.failures) std::cerr << "failure: " << f << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> criteria;
  std::string prepare, work = "acceptance_work", configs;
  app.add_option("--criterion", criteria, "criteria to run (default: all)")->check(CLI::Range(1, 9));
  app.add_option("--prepare", prepare, "case1 or case1-repeat: make a Case 1 run and exit")
      ->check(CLI::IsMember({"case1", "case1-repeat"}));
  app.add_option("--work", work, "directory for runs");
  app.add_option("--configs", configs, "directory holding case1.cfg and case2.cfg")->required();
  CLI11_PARSE(app, argc, argv);

  const fs::path wdir(work), cdir(configs);
  try {
    fs::create_directories(wdir);
    if (!prepare.empty()) {
      prepare_case1(cdir, wdir / (prepare == "case1" ? "case1_a" : "case1_b"));
      return 0;
    }
    if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9};

    const GradcheckOptions go;
    const PropsOptions po;
    bool all = true;
    for (int k : criteria) {
      Line line{k, false, ""};
      try {
        switch (k) {
          case 1: line = criterion1(po); break;
          case 2: line = criterion2(go); break;
          case 3: line = criterion3(go); break;
          case 4: line = criterion4(po); break;
          case 5: line = criterion5(po); break;
          case 6: line = criterion6(wdir / "case1_a"); break;
          case 7: line = criterion7(wdir / "case1_a"); break;
          case 8: line = criterion8(cdir, wdir); break;
          case 9: line = criterion9(wdir / "case1_a", wdir / "case1_b"); break;
        }
      } catch (const std::exception& e) {
        line.detail = std::string("error: ") + e.what();
      }
      std::cout << "criterion " << line.criterion << ": " << (line.pass ? "PASS" : "FAIL") << "  "
                << line.detail << std::endl;
      all = all && line.pass;
    }
    return all ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
