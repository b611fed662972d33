// Command-line front end: exact, Monte Carlo, baseline and missing-data
// intervals, plus the validation and benchmark reports.
//
// Exit codes: 0 ok, 1 analysis error, 2 usage error.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fastci/fastci.hpp"
#include "json.hpp"

namespace {

using fastci::Interval;
using fastci::Level;
using fastci::ObservedCounts;
using json = nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kAnalysisError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ObservedCounts parse_counts(const std::string& text) {
  std::vector<int> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw UsageError("counts must be four comma-separated integers n11,n10,n01,n00");
    }
    if (used != item.size() || value < 0) throw UsageError("counts must be nonnegative integers");
    parts.push_back(value);
  }
  if (parts.size() != 4) throw UsageError("counts must be four comma-separated integers n11,n10,n01,n00");
  ObservedCounts obs{parts[0], parts[1], parts[2], parts[3]};
  if (obs.treated() == 0 || obs.n() - obs.treated() == 0) {
    throw UsageError("both groups need at least one subject");
  }
  return obs;
}

Level parse_level(const std::string& text, const char* what) {
  try {
    return Level::parse(text);
  } catch (const fastci::ValidationError&) {
    throw UsageError(std::string(what) + " must be a number strictly between 0 and 1");
  }
}

std::uint64_t parse_seed(const std::string& text) {
  try {
    std::size_t used = 0;
    const bool hex = text.rfind("0x", 0) == 0 || text.rfind("0X", 0) == 0;
    const auto v = std::stoull(hex ? text.substr(2) : text, &used, hex ? 16 : 10);
    if (used != text.size() - (hex ? 2 : 0)) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw UsageError("seed must be a decimal or 0x-prefixed hex integer");
  }
}

fastci::Arithmetic parse_arithmetic(const std::string& text, int n) {
  if (text == "auto") return fastci::default_arithmetic(n);
  if (text == "rational") return fastci::Arithmetic::rational;
  if (text == "floating") return fastci::Arithmetic::floating;
  throw UsageError("arithmetic must be auto, rational or floating");
}

unsigned default_threads() {
  if (const char* env = std::getenv("FASTCI_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

struct Report {
  Interval interval;
  int n = 0;
  double estimate = 0.0;
  std::string alpha;
  std::string method;
  long tests = 0;
  std::optional<long> k;
  std::optional<std::uint64_t> seed;
  double wall_ms = 0.0;
  json extra = json::object();
};

std::string level_text(const Level& l) {
  std::ostringstream os;
  os << std::setprecision(15) << l.value();
  return os.str();
}

double estimate_of(const ObservedCounts& obs) {
  const auto d = obs.design();
  return static_cast<double>(fastci::neyman(obs, d).num) / static_cast<double>(d.stat_denominator());
}

void emit(const Report& r, const std::string& format) {
  if (format == "json") {
    json out;
    if (r.interval.empty()) {
      out["interval_scaled"] = nullptr;
      out["interval"] = nullptr;
    } else {
      out["interval_scaled"] = {r.interval.lower(), r.interval.upper()};
      out["interval"] = {static_cast<double>(r.interval.lower()) / r.n, static_cast<double>(r.interval.upper()) / r.n};
    }
    out["estimate"] = r.estimate;
    out["alpha"] = r.alpha;
    out["method"] = r.method;
    out["tests"] = r.tests;
    out["k"] = r.k ? json(*r.k) : json(nullptr);
    out["seed"] = r.seed ? json(*r.seed) : json(nullptr);
    out["wall_ms"] = r.wall_ms;
    for (const auto& [key, value] : r.extra.items()) out[key] = value;
    std::cout << out.dump() << '\n';
    return;
  }
  std::cout << "method    " << r.method << '\n';
  std::cout << "alpha     " << r.alpha << '\n';
  if (r.interval.empty()) {
    std::cout << "interval  empty\n";
  } else {
    std::cout << "n*tau     [" << r.interval.lower() << ", " << r.interval.upper() << "]\n";
    std::cout << "tau       [" << r.interval.lower() << "/" << r.n << ", " << r.interval.upper() << "/" << r.n
              << "] = [" << static_cast<double>(r.interval.lower()) / r.n << ", "
              << static_cast<double>(r.interval.upper()) / r.n << "]\n";
  }
  std::cout << "estimate  " << r.estimate << '\n';
  std::cout << "tests     " << r.tests << '\n';
  if (r.k) std::cout << "K         " << *r.k << '\n';
  if (r.seed) std::cout << "seed      " << *r.seed << '\n';
  for (const auto& [key, value] : r.extra.items()) std::cout << std::left << std::setw(9) << key << ' ' << value << '\n';
  std::cout << "wall_ms   " << r.wall_ms << '\n';
}

template <class Fn>
double timed(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

Report run_exact(const ObservedCounts& obs, const Level& alpha, fastci::Arithmetic mode) {
  Report r;
  r.n = obs.n();
  r.alpha = level_text(alpha);
  r.estimate = estimate_of(obs);
  r.wall_ms = timed([&] {
    if (obs.design().balanced()) {
      const auto res = fastci::fast_interval_balanced(alpha, obs, mode);
      r.interval = res.interval;
      r.tests = res.tests;
      r.method = "fast-balanced";
    } else {
      fastci::McConfig cfg;
      cfg.alpha = alpha;
      const auto res = fastci::unbalanced_interval(cfg, obs, fastci::SearchMode::exact, mode);
      r.interval = res.interval;
      r.tests = res.tests + res.line_points;
      r.method = "unbalanced-exact";
    }
  });
  return r;
}

int run_validate(const std::string& suite, const std::string& format, std::uint64_t seed) {
  const Level alpha{1, 20};
  json out = json::object();
  bool ok = true;
  if (suite == "length" || suite == "all") {
    json rows = json::array();
    for (const auto& row : fastci::length_bound_sweep(alpha, {20, 50, 100, 200}, 50, seed)) {
      rows.push_back({{"n", row.n}, {"samples", row.samples}, {"max_length", row.max_length},
                      {"bound", row.bound}, {"violations", row.violations}});
      ok = ok && row.violations == 0;
    }
    out["length"] = rows;
  }
  if (suite == "counts" || suite == "all") {
    json rows = json::array();
    for (const auto& row : fastci::count_bound_sweep(alpha, {16, 24, 32, 48, 64}, 20, seed)) {
      rows.push_back({{"n", row.n}, {"samples", row.samples}, {"max_tests", row.max_tests},
                      {"bound", row.bound}, {"violations", row.violations}});
      ok = ok && row.violations == 0;
    }
    out["counts"] = rows;
  }
  if (suite == "coverage" || suite == "all") {
    json rows = json::array();
    for (const auto& [y, d, method] :
         {std::tuple{fastci::CountVector{2, 3, 3, 2}, fastci::Design{10, 5}, fastci::IntervalMethod::fast},
          std::tuple{fastci::CountVector{3, 1, 2, 3}, fastci::Design{9, 4}, fastci::IntervalMethod::unbalanced}}) {
      const auto c = fastci::coverage_exhaustive(y, alpha, d, method);
      const bool pass = c >= fastci::Rational(19, 20);
      std::ostringstream ys;
      ys << y;
      rows.push_back({{"y", ys.str()}, {"n", d.n}, {"m", d.m}, {"coverage", fastci::detail::to_double(c)},
                      {"pass", pass}});
      ok = ok && pass;
    }
    out["coverage"] = rows;
  }
  if (out.empty()) throw UsageError("suite must be length, counts, coverage or all");
  out["pass"] = ok;
  if (format == "json") {
    std::cout << out.dump() << '\n';
  } else {
    std::cout << out.dump(2) << '\n';
  }
  return ok ? kOk : kAnalysisError;
}

int run_bench(const std::string& format, std::uint64_t seed, unsigned threads) {
  const auto rows = fastci::table1_repro(seed, threads);
  if (format == "json") {
    json out = json::array();
    for (const auto& r : rows) {
      std::ostringstream o;
      o << r.obs;
      out.push_back({{"obs", o.str()},
                     {"rh", {r.rh.lower(), r.rh.upper()}},
                     {"rh_tests", r.rh_tests},
                     {"fast", {r.fast.lower(), r.fast.upper()}},
                     {"fast_tests", r.fast_tests},
                     {"mc", r.mc.empty() ? json(nullptr) : json{r.mc.lower(), r.mc.upper()}},
                     {"mc_tests", r.mc_tests},
                     {"mc_k", r.mc_k}});
    }
    std::cout << out.dump() << '\n';
    return kOk;
  }
  std::cout << "obs          RH          tests  fast        tests  MC(eps=0.005)  tests\n";
  for (const auto& r : rows) {
    std::ostringstream a, b, c, o;
    o << r.obs;
    a << r.rh;
    b << r.fast;
    c << r.mc;
    std::cout << std::left << std::setw(13) << o.str() << std::setw(12) << a.str() << std::setw(7) << r.rh_tests
              << std::setw(12) << b.str() << std::setw(7) << r.fast_tests << std::setw(15) << c.str() << r.mc_tests
              << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and Monte Carlo confidence intervals for the average treatment effect with binary outcomes"};
  app.require_subcommand(1);

  std::string counts;
  std::string alpha_text = "0.05";
  std::string format = "text";
  std::string arith = "auto";
  std::string eps_text = "0.01";
  std::string k_text = "auto";
  std::string seed_text = "0";
  std::string file;
  std::string suite = "all";
  bool pad = false;
  bool table1 = false;
  unsigned threads = default_threads();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--alpha", alpha_text, "significance level in (0,1)");
    sub->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  };

  auto* exact = app.add_subcommand("exact", "exact interval (fast search when balanced)");
  exact->add_option("--counts", counts, "n11,n10,n01,n00")->required();
  exact->add_option("--arith", arith, "auto, rational or floating");
  add_common(exact);

  auto* rh = app.add_subcommand("rh", "exhaustive imputation baseline");
  rh->add_option("--counts", counts, "n11,n10,n01,n00")->required();
  rh->add_option("--arith", arith, "auto, rational or floating");
  add_common(rh);

  auto* mc = app.add_subcommand("mc", "Monte Carlo interval at effective level alpha - eps");
  mc->add_option("--counts", counts, "n11,n10,n01,n00")->required();
  mc->add_option("--eps", eps_text, "Monte Carlo tolerance");
  mc->add_option("--k", k_text, "samples per test, or auto");
  mc->add_option("--seed", seed_text, "decimal or 0x hex");
  mc->add_option("--threads", threads, "worker threads (default $FASTCI_THREADS or 1)")->check(CLI::PositiveNumber);
  add_common(mc);

  auto* missing = app.add_subcommand("missing", "interval from a subject file with missing outcomes");
  missing->add_option("--file", file, "subject file (header, then z,y per line)")->required();
  missing->add_flag("--pad", pad, "pad an odd trial with one missing subject");
  add_common(missing);

  auto* validate = app.add_subcommand("validate", "run validation sweeps");
  validate->add_option("--suite", suite, "length, counts, coverage or all");
  validate->add_option("--seed", seed_text, "decimal or 0x hex");
  validate->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* bench = app.add_subcommand("bench", "benchmark reports");
  bench->add_flag("--table1", table1, "reference tables through all three balanced algorithms")->required();
  bench->add_option("--seed", seed_text, "decimal or 0x hex");
  bench->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*validate) return run_validate(suite, format, parse_seed(seed_text));
    if (*bench) return run_bench(format, parse_seed(seed_text), threads);

    const Level alpha = parse_level(alpha_text, "alpha");
    if (*exact) {
      const auto obs = parse_counts(counts);
      emit(run_exact(obs, alpha, parse_arithmetic(arith, obs.n())), format);
    } else if (*rh) {
      const auto obs = parse_counts(counts);
      Report r;
      r.n = obs.n();
      r.alpha = level_text(alpha);
      r.estimate = estimate_of(obs);
      r.method = "rh";
      r.wall_ms = timed([&] {
        const auto res = fastci::rh_interval(alpha, obs, parse_arithmetic(arith, obs.n()));
        r.interval = res.interval;
        r.tests = res.tests;
      });
      emit(r, format);
    } else if (*mc) {
      const auto obs = parse_counts(counts);
      const Level eps = parse_level(eps_text, "eps");
      if (!(eps < alpha)) throw UsageError("eps must be smaller than alpha");
      const Level effective = alpha - eps;
      if (!(eps < effective)) throw UsageError("eps must be smaller than alpha / 2 (effective level alpha - eps)");
      const bool balanced = obs.design().balanced();
      const long recommended = balanced ? fastci::required_K_balanced(eps, obs.n()).k
                                        : fastci::required_K_unbalanced(eps, obs.n());
      long k = recommended;
      if (k_text != "auto") {
        try {
          std::size_t used = 0;
          k = std::stol(k_text, &used);
          if (used != k_text.size() || k < 1) throw std::invalid_argument("k");
        } catch (const std::exception&) {
          throw UsageError("K must be a positive integer or auto");
        }
      }
      fastci::McConfig cfg{effective, eps, k, parse_seed(seed_text), threads};
      Report r;
      r.n = obs.n();
      r.alpha = level_text(alpha);
      r.estimate = estimate_of(obs);
      r.k = k;
      r.seed = cfg.seed;
      r.wall_ms = timed([&] {
        if (balanced) {
          const auto res = fastci::mc_interval_balanced(cfg, obs);
          r.interval = res.interval;
          r.tests = res.tests;
          r.method = "mc-balanced";
        } else {
          const auto res = fastci::unbalanced_interval(cfg, obs, fastci::SearchMode::mc);
          r.interval = res.interval;
          r.tests = res.tests;
          r.extra["line_points"] = res.line_points;
          r.method = "mc-unbalanced";
        }
      });
      r.extra["eps"] = level_text(eps);
      r.extra["effective_alpha"] = level_text(effective);
      r.extra["k_recommended"] = recommended;
      if (k < recommended) r.extra["warning"] = "K below the recommended sample size";
      if (balanced && obs.n() < 15) r.extra["note"] = "sample-size bound assumes n >= 15";
      emit(r, format);
    } else if (*missing) {
      std::ifstream in(file);
      if (!in) throw UsageError("cannot open " + file);
      auto data = fastci::read_subjects(in);
      if (pad) data = fastci::pad_odd(data);
      Report r;
      r.n = data.n();
      r.alpha = level_text(alpha);
      const auto e = fastci::impute_extremes(data);
      r.estimate = estimate_of(e.plus);
      r.method = data.design().balanced() ? "missing-balanced" : "missing-unbalanced";
      r.wall_ms = timed([&] {
        const auto res = fastci::missing_interval(alpha, data);
        r.interval = res.interval;
        r.tests = res.tests;
      });
      r.extra["missing"] = data.missing();
      r.extra["estimate_minus"] = estimate_of(e.minus);
      emit(r, format);
    }
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const fastci::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kAnalysisError;
  }
}
