// ltpmor: generate or load a periodic system, search dominant poles, build and
// evaluate the reduced model. Exit 2 on usage errors, 1 on numerical failures.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ltpmor.hpp"

namespace fs = std::filesystem;
using namespace ltpmor;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------ options

struct SourceOpts {
  std::string example;
  std::string system;
};

struct GridOpts {
  double nu_min = 1e-6;
  double nu_max = 1e7;
  int points = 2000;
};

struct Opts {
  std::string out = ".";
  SourceOpts src;
  GridOpts grid;
  // generate-example
  int n = 1000;
  int n_slow = -1;
  double slow_lo = -4.0, slow_hi = 0.0, fast_lo = 3.0, fast_hi = 6.0;
  // dpa / sadpa
  double s0_re = -0.1, s0_im = 0.0;
  std::vector<std::string> s0{"-0.1"};
  int n_want = 5;
  double tol = 1e-8;
  int max_iter = 50;
  int K = -1;
  // build-rom / simulate / hinf
  std::string partial_floquet;
  std::string rom;
  double sigma = -1.0;
  double t_end = 20.0;
  int samples = 2000;
  int max_order = 10;
  // phv-sweep
  double re = 0.0;
  double re_min = -1.0, re_max = 1.0;
  double phv_nu_min = 0.0, phv_nu_max = 10.0;
  int phv_points = 201;
  int random = 0;
  std::uint64_t seed = 1;
  // oracle-check
  double oracle_tol = 1e-6;
};

ExampleParams parse_example(const std::string& text) {
  ExampleParams p;
  bool slow_given = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--example expects key=value pairs, got '" + item + "'");
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      if (key == "n") {
        p.n = std::stoi(val, &used);
      } else if (key == "n_slow") {
        p.n_slow = std::stoi(val, &used);
        slow_given = true;
      } else if (key == "slow_lo") {
        p.slow_lo = std::stod(val, &used);
      } else if (key == "slow_hi") {
        p.slow_hi = std::stod(val, &used);
      } else if (key == "fast_lo") {
        p.fast_lo = std::stod(val, &used);
      } else if (key == "fast_hi") {
        p.fast_hi = std::stod(val, &used);
      } else {
        throw UsageError("unknown --example key '" + key + "'");
      }
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::logic_error&) {
      throw UsageError("bad value for --example key '" + key + "': '" + val + "'");
    }
  }
  if (!slow_given) p.n_slow = std::min(p.n_slow, p.n);
  return p;
}

/// "re" or "re,im".
cplx parse_complex(const std::string& text) {
  const auto comma = text.find(',');
  try {
    std::size_t used = 0;
    const std::string re = text.substr(0, comma);
    const double a = std::stod(re, &used);
    if (used != re.size()) throw std::invalid_argument(text);
    if (comma == std::string::npos) return {a, 0.0};
    const std::string im = text.substr(comma + 1);
    const double b = std::stod(im, &used);
    if (used != im.size()) throw std::invalid_argument(text);
    return {a, b};
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse shift '" + text + "'; expected re or re,im");
  }
}

// ------------------------------------------------------------ sources

struct Source {
  LtpSystem system;
  std::optional<ExampleGroundTruth> truth;
};

Source load_source(const SourceOpts& s) {
  if (!s.example.empty() && !s.system.empty()) throw UsageError("--example and --system are mutually exclusive");
  if (s.example.empty() && s.system.empty()) throw UsageError("one of --example or --system is required");
  if (!s.system.empty()) return {load_system(s.system), std::nullopt};
  auto ex = build_example(parse_example(s.example));
  return {std::move(ex.system), std::move(ex.truth)};
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

/// Full-order LTI extension used as the reference for frequency-domain errors.
LtiExtension reference_extension(const Source& src, int K) {
  if (src.truth) return example_extension(*src.truth, K);
  const auto orc = dense_floquet_oracle(src.system);
  return build_lti_extension(build_rom(make_partial_floquet(orc.triples), src.system), K);
}

int rom_depth(const Rom& rom) {
  return std::max(significant_depth(rom.br, 1e-10), significant_depth(rom.cr, 1e-10));
}

// ------------------------------------------------------------ manifest

class Manifest {
 public:
  Manifest(std::string subcommand, nlohmann::json config) : sub_(std::move(subcommand)) {
    j_["subcommand"] = sub_;
    j_["config"] = std::move(config);
    j_["versions"] = {{"ltpmor", kVersion},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                    "." + std::to_string(EIGEN_MINOR_VERSION)},
                      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                      {"cli11", CLI11_VERSION},
                      {"compiler", __VERSION__}};
    j_["timings"] = nlohmann::json::object();
    j_["diagnostics"] = nlohmann::json::object();
    j_["artifacts"] = nlohmann::json::array();
  }

  template <class F>
  auto timed(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      j_["timings"][name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  nlohmann::json& diag() { return j_["diagnostics"]; }
  void artifact(const fs::path& p) { j_["artifacts"].push_back(p.filename().string()); }

  void workspace(const ResolventWorkspace& ws) {
    const auto& st = ws.stats();
    diag()["harmonic_depth"] = ws.harmonic_depth();
    diag()["max_tail"] = st.max_tail;
    diag()["min_rcond"] = std::isfinite(st.min_rcond) ? nlohmann::json(st.min_rcond) : nlohmann::json(nullptr);
    diag()["solves"] = st.solves;
    diag()["factorizations"] = st.factorizations;
    diag()["doublings"] = st.doublings;
  }

  void write(const fs::path& dir) const { write_json(dir / ("manifest_" + sub_ + ".json"), j_); }

 private:
  std::string sub_;
  nlohmann::json j_;
};

nlohmann::json echo_options(const CLI::App* app) {
  nlohmann::json out = nlohmann::json::object();
  for (const CLI::Option* o : app->get_options()) {
    const std::string name = o->get_single_name();
    if (name == "help" || name == "config") continue;
    const auto& res = o->results();
    if (res.empty()) {
      if (!o->get_default_str().empty()) out[name] = o->get_default_str();
    } else {
      out[name] = res.size() == 1 ? nlohmann::json(res.front()) : nlohmann::json(res);
    }
  }
  return out;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

nlohmann::json complex_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

// ------------------------------------------------------------ subcommands

void write_trace_csv(const fs::path& path, const DpaTrace& tr) {
  CsvWriter csv(path.string(), {"iteration", "shift_re", "shift_im", "residual"});
  for (std::size_t i = 0; i < tr.shifts.size(); ++i) {
    csv << static_cast<int>(i + 1) << tr.shifts[i]
        << (i < tr.residuals.size() ? tr.residuals[i] : std::numeric_limits<double>::quiet_NaN());
    csv.end_row();
  }
}

int run_generate(const Opts& o, Manifest& m, const fs::path& out) {
  ExampleParams p{o.n, o.n_slow < 0 ? std::min(10, o.n) : o.n_slow, o.slow_lo, o.slow_hi, o.fast_lo, o.fast_hi};
  const auto ex = m.timed("generate", [&] { return build_example(p); });
  save_system(ex.system, (out / "system.json").string());
  m.artifact(out / "system.json");
  write_json(out / "ground_truth.json", {{"lambdas", ex.truth.lambdas},
                                         {"spectrum_right", ex.truth.spectrum_right},
                                         {"bhat", to_json(ex.truth.bhat)},
                                         {"chat", to_json(ex.truth.chat)}});
  m.artifact(out / "ground_truth.json");
  m.diag()["n"] = ex.system.dim();
  m.diag()["depth_A"] = ex.system.A.depth();
  return 0;
}

int run_dpa(const Opts& o, Manifest& m, const fs::path& out) {
  const Source src = load_source(o.src);
  ResolventWorkspace ws(src.system);
  const cplx s0{o.s0_re, o.s0_im};
  DpaResult r;
  std::optional<MaxIterExceeded> failure;
  m.timed("dpa", [&] {
    try {
      r = dpa_iterate(ws, s0, {.tol = o.tol, .max_iter = o.max_iter, .K = o.K});
    } catch (const MaxIterExceeded& e) {
      failure = e;
      r.trace = e.trace();
    }
  });
  write_trace_csv(out / "dpa_trace.csv", r.trace);
  m.artifact(out / "dpa_trace.csv");
  m.workspace(ws);
  m.diag()["iterations"] = r.trace.iterations;
  m.diag()["perturbations"] = r.trace.perturbations;
  if (failure) throw *failure;

  nlohmann::json shifts = nlohmann::json::array();
  for (cplx s : r.trace.shifts) shifts.push_back(complex_json(s));
  const auto canon = canonicalize_lambda(r.triple.lambda, src.system.omega());
  write_json(out / "dpa.json", {{"lambda", complex_json(r.triple.lambda)},
                                {"lambda_canonical", complex_json(canon.lambda)},
                                {"family_index", canon.k},
                                {"residual", r.triple.residual},
                                {"left_residual", r.triple.left_residual},
                                {"iterations", r.trace.iterations},
                                {"K", r.K},
                                {"shifts", shifts}});
  m.artifact(out / "dpa.json");
  m.diag()["K"] = r.K;
  m.diag()["biorthogonality_defect"] = biorthogonality_defect(r.triple);
  return 0;
}

void write_partial_floquet(const fs::path& path, const std::vector<Eigentriple>& triples) {
  write_json(path, to_json(make_partial_floquet(triples)));
}

int run_sadpa(const Opts& o, Manifest& m, const fs::path& out) {
  const Source src = load_source(o.src);
  std::vector<cplx> s0;
  for (const auto& s : o.s0) s0.push_back(parse_complex(s));
  ResolventWorkspace ws(src.system);
  SadpaResult r;
  std::optional<MaxIterExceeded> failure;
  m.timed("sadpa", [&] {
    try {
      r = sadpa_run(ws, s0, {.n_want = o.n_want, .tol = o.tol, .max_iter = o.max_iter, .K = o.K});
    } catch (const MaxIterExceeded& e) {
      failure = e;
    }
  });
  m.workspace(ws);
  if (failure) {
    write_trace_csv(out / "convergence.csv", failure->trace());
    m.artifact(out / "convergence.csv");
    if (!failure->found().empty()) {
      write_partial_floquet(out / "partial_floquet.json", failure->found());
      m.artifact(out / "partial_floquet.json");
    }
    m.diag()["found"] = failure->found().size();
    throw *failure;
  }

  std::vector<FoundPole> ranked = r.poles;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const FoundPole& a, const FoundPole& b) { return a.dominance > b.dominance; });
  {
    CsvWriter csv((out / "poles.csv").string(),
                  {"lambda_re", "lambda_im", "dominance", "residual", "left_residual", "iteration"});
    for (const auto& p : ranked) {
      csv << p.triple.lambda << p.dominance << p.triple.residual << p.triple.left_residual << p.iteration;
      csv.end_row();
    }
  }
  m.artifact(out / "poles.csv");
  {
    CsvWriter csv((out / "convergence.csv").string(),
                  {"iteration", "shift_re", "shift_im", "residual", "top_re", "top_im", "subspace_dim", "event"});
    for (const auto& e : r.log) {
      csv << e.iteration << e.shift << e.residual << e.top_pole << static_cast<long>(e.subspace_dim) << e.event;
      csv.end_row();
    }
  }
  m.artifact(out / "convergence.csv");

  std::vector<Eigentriple> triples;
  double worst_bi = 0.0;
  for (const auto& p : r.poles) {
    triples.push_back(p.triple);
    worst_bi = std::max(worst_bi, biorthogonality_defect(p.triple));
  }
  write_partial_floquet(out / "partial_floquet.json", triples);
  m.artifact(out / "partial_floquet.json");
  m.diag()["K"] = r.K;
  m.diag()["iterations"] = r.iterations;
  m.diag()["found"] = r.poles.size();
  m.diag()["real_part_cap"] = r.real_part_cap;
  m.diag()["residue_floor"] = r.residue_floor;
  m.diag()["biorthogonality_defect"] = worst_bi;
  return 0;
}

int run_build_rom(const Opts& o, Manifest& m, const fs::path& out) {
  const Source src = load_source(o.src);
  const std::string pf_path = o.partial_floquet.empty() ? (out / "partial_floquet.json").string() : o.partial_floquet;
  const PartialFloquet pf = partial_floquet_from_json(read_json(pf_path));
  const Rom rom = m.timed("build_rom", [&] { return build_rom(pf, src.system); });
  if (rom.mr_condition > 1e8) warn("M_r is ill-conditioned (condition " + format_double(rom.mr_condition) + ")");
  for (Index j = 0; j < rom.r(); ++j)
    if (rom.lambdas(j).real() > 0.0)
      warn("reduced pole " + std::to_string(j) + " has positive real part " + format_double(rom.lambdas(j).real()));
  write_json(out / "rom.json", to_json(rom));
  m.artifact(out / "rom.json");

  const int K = o.K >= 0 ? o.K : rom_depth(rom);
  const LtiExtension ext = build_lti_extension(rom, K);
  write_json(out / "extension.json", to_json(ext));
  m.artifact(out / "extension.json");

  auto table = dominance_table(ext);
  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return table[a].degdom_hext > table[b].degdom_hext; });
  std::vector<int> rank(table.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i + 1);
  {
    CsvWriter csv((out / "dominance.csv").string(), {"lambda_re", "lambda_im", "degdom_hext", "degdom_g", "rank"});
    for (std::size_t i = 0; i < table.size(); ++i) {
      csv << table[i].lambda << table[i].degdom_hext << table[i].degdom_g << rank[i];
      csv.end_row();
    }
  }
  m.artifact(out / "dominance.csv");
  m.diag()["r"] = rom.r();
  m.diag()["K"] = K;
  m.diag()["mr_condition"] = rom.mr_condition;
  m.diag()["gram_constancy_defect"] = gram_constancy_defect(pf);
  return 0;
}

Rom load_rom(const Opts& o, const fs::path& out) {
  return rom_from_json(read_json(o.rom.empty() ? (out / "rom.json").string() : o.rom));
}

int run_simulate(const Opts& o, Manifest& m, const fs::path& out) {
  if (o.samples < 2 || !(o.t_end > 0.0)) throw UsageError("--samples must be >= 2 and --t-end > 0");
  const Source src = load_source(o.src);
  const Rom rom = load_rom(o, out);
  InputSignal u;
  u.sigma = o.sigma;
  u.period = src.system.period();
  const auto grid = uniform_grid(o.t_end, o.samples);
  const SimResult full = m.timed("full_order", [&] {
    return src.truth ? simulate_fom_example(*src.truth, u, grid) : simulate_fom(src.system, u, grid);
  });
  const SimResult red = m.timed("reduced", [&] { return simulate_rom(rom, u, grid); });
  const OutputError err = pointwise_relative_error(full.y, red.y);
  {
    CsvWriter csv((out / "sim.csv").string(), {"t", "y_re", "y_im", "yr_re", "yr_im", "relerr"});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto ii = static_cast<Index>(i);
      csv << grid[i] << full.y(ii) << red.y(ii) << err.rel(ii);
      csv.end_row();
    }
  }
  m.artifact(out / "sim.csv");
  m.diag()["reference_method"] = full.method;
  m.diag()["max_rel"] = err.max_rel;
  m.diag()["mean_rel"] = err.mean_rel;
  return 0;
}

FrequencyGrid frequency_grid(const GridOpts& g) {
  if (!(g.nu_min > 0.0) || !(g.nu_max > g.nu_min) || g.points < 2)
    throw UsageError("frequency grid needs 0 < --nu-min < --nu-max and --points >= 2");
  FrequencyGrid f;
  f.nu_min = g.nu_min;
  f.nu_max = g.nu_max;
  f.points = g.points;
  return f;
}

int run_hinf(const Opts& o, Manifest& m, const fs::path& out) {
  const FrequencyGrid grid = frequency_grid(o.grid);
  const Source src = load_source(o.src);
  const Rom rom = load_rom(o, out);
  const int K = o.K >= 0 ? o.K : std::max(rom_depth(rom), src.truth ? 1 : 0);
  const LtiExtension full = m.timed("reference", [&] { return reference_extension(src, K); });
  const LtiExtension red = build_lti_extension(rom, K);
  const HinfResult norm = m.timed("norm", [&] { return hinf_norm(full, grid); });
  const HinfResult err = m.timed("error", [&] { return sampled_hinf_error(full, red, grid); });
  {
    CsvWriter csv((out / "hinf_sweep.csv").string(), {"nu", "sigma_max_err"});
    for (std::size_t i = 0; i < err.nu.size(); ++i) {
      csv << err.nu[i] << err.sigma[i];
      csv.end_row();
    }
  }
  m.artifact(out / "hinf_sweep.csv");
  m.diag()["K"] = K;
  m.diag()["r"] = rom.r();
  m.diag()["hinf_full"] = norm.value;
  m.diag()["hinf_error"] = err.value;
  m.diag()["hinf_error_relative"] = err.value / norm.value;
  m.diag()["nu_peak"] = err.nu_peak;
  std::cout << "relative H-infinity error " << format_double(err.value / norm.value) << " at nu = "
            << format_double(err.nu_peak) << '\n';
  return 0;
}

int run_compare_bt(const Opts& o, Manifest& m, const fs::path& out) {
  if (o.max_order < 1) throw UsageError("--max-order must be >= 1");
  const FrequencyGrid grid = frequency_grid(o.grid);
  const Source src = load_source(o.src);
  const int K = o.K >= 0 ? o.K : (src.truth ? 1 : 0);
  const LtiExtension full = m.timed("reference", [&] { return reference_extension(src, K); });
  const Index top = std::min<Index>(o.max_order, full.r());
  const double norm = hinf_norm(full, grid).value;
  std::vector<double> dpt, bt;
  m.timed("curves", [&] {
    BalancedTruncator btr(full);
    for (Index k = 1; k <= top; ++k) {
      dpt.push_back(sampled_hinf_error(full, dominant_truncation(full, k), grid).value / norm);
      bt.push_back(sampled_hinf_error(full, btr.reduce(k), grid).value / norm);
    }
  });
  {
    CsvWriter csv((out / "bt_compare.csv").string(), {"order", "err_dpt", "err_bt"});
    for (std::size_t i = 0; i < dpt.size(); ++i) {
      csv << static_cast<int>(i + 1) << dpt[i] << bt[i];
      csv.end_row();
    }
  }
  m.artifact(out / "bt_compare.csv");
  m.diag()["K"] = K;
  m.diag()["hinf_full"] = norm;
  return 0;
}

int run_phv_sweep(const Opts& o, Manifest& m, const fs::path& out) {
  if (o.phv_points < 1 || o.random < 0) throw UsageError("--points must be >= 1 and --random >= 0");
  const Source src = load_source(o.src);
  ResolventWorkspace ws(src.system);
  const int K = o.K >= 0 ? o.K : estimate_fourier_depth(ws);
  std::vector<cplx> shifts;
  if (o.random > 0) {
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> re(o.re_min, o.re_max), im(o.phv_nu_min, o.phv_nu_max);
    for (int i = 0; i < o.random; ++i) {
      const double a = re(rng);
      shifts.emplace_back(a, im(rng));
    }
  } else {
    for (int i = 0; i < o.phv_points; ++i) {
      const double f = o.phv_points == 1 ? 0.0 : static_cast<double>(i) / (o.phv_points - 1);
      shifts.emplace_back(o.re, o.phv_nu_min + f * (o.phv_nu_max - o.phv_nu_min));
    }
  }
  {
    CsvWriter csv((out / "phv.csv").string(), {"s_re", "s_im", "l", "g_re", "g_im"});
    m.timed("sweep", [&] {
      for (cplx s : shifts) {
        const PhvSample g = eval_phv(ws, s, K);
        for (int l = -2 * K; l <= 2 * K; ++l) {
          csv << s << l << g.at(l);
          csv.end_row();
        }
      }
    });
  }
  m.artifact(out / "phv.csv");
  m.workspace(ws);
  m.diag()["K"] = K;
  m.diag()["shifts"] = shifts.size();
  return 0;
}

int run_oracle_check(const Opts& o, Manifest& m, const fs::path& out) {
  const Source src = load_source(o.src);
  const FloquetOracle orc = m.timed("oracle", [&] { return dense_floquet_oracle(src.system); });
  auto sorted = [](VectorXc v) {
    std::sort(v.data(), v.data() + v.size(), [](cplx a, cplx b) {
      return a.real() != b.real() ? a.real() > b.real() : a.imag() < b.imag();
    });
    return v;
  };
  const VectorXc hill = sorted(orc.hill_exponents), mono = sorted(orc.monodromy_exponents);
  {
    CsvWriter csv((out / "oracle.csv").string(), {"hill_re", "hill_im", "monodromy_re", "monodromy_im"});
    for (Index i = 0; i < std::max(hill.size(), mono.size()); ++i) {
      const cplx nan{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
      csv << (i < hill.size() ? hill(i) : nan) << (i < mono.size() ? mono(i) : nan);
      csv.end_row();
    }
  }
  m.artifact(out / "oracle.csv");
  m.diag()["agreement"] = orc.agreement;
  m.diag()["eigvec_condition"] = orc.eigvec_condition;
  m.diag()["defective"] = orc.defective;
  m.diag()["hill_depth"] = orc.hill_depth;
  const bool ok = orc.agreement < o.oracle_tol;
  m.diag()["pass"] = ok;
  std::cout << (ok ? "PASS" : "FAIL") << " oracle-check: Hill and monodromy exponents agree to "
            << format_double(orc.agreement) << " (tolerance " << format_double(o.oracle_tol) << ")\n";
  return ok ? 0 : 1;
}

// ------------------------------------------------------------ wiring

void add_out(CLI::App* sub, Opts& o) { sub->add_option("--out", o.out, "output directory")->capture_default_str(); }

void add_source(CLI::App* sub, Opts& o) {
  sub->add_option("--example", o.src.example,
                  "benchmark system, key=value list: n, n_slow, slow_lo, slow_hi, fast_lo, fast_hi");
  sub->add_option("--system", o.src.system, "system JSON file")->check(CLI::ExistingFile);
}

void add_grid(CLI::App* sub, Opts& o) {
  sub->add_option("--nu-min", o.grid.nu_min, "smallest |frequency|")->capture_default_str();
  sub->add_option("--nu-max", o.grid.nu_max, "largest |frequency|")->capture_default_str();
  sub->add_option("--points", o.grid.points, "log-spaced points per sign")->capture_default_str();
}

void add_k(CLI::App* sub, Opts& o) {
  sub->add_option("--K", o.K, "Fourier depth of the ports; estimated when negative")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dominant-pole reduction of linear time-periodic systems"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML file mirroring the flags, one [section] per subcommand; flags override it");
  app.require_subcommand(1);
  app.fallthrough();
  Opts o;

  auto* gen = app.add_subcommand("generate-example", "write the benchmark system and its Floquet data");
  add_out(gen, o);
  gen->add_option("--n", o.n, "state dimension (even)")->capture_default_str();
  gen->add_option("--n-slow", o.n_slow, "slow modes; min(10, n) when negative")->capture_default_str();
  gen->add_option("--slow-lo", o.slow_lo, "decade of the smallest slow magnitude")->capture_default_str();
  gen->add_option("--slow-hi", o.slow_hi, "decade of the largest slow magnitude")->capture_default_str();
  gen->add_option("--fast-lo", o.fast_lo, "decade of the smallest fast magnitude")->capture_default_str();
  gen->add_option("--fast-hi", o.fast_hi, "decade of the largest fast magnitude")->capture_default_str();

  auto* dpa = app.add_subcommand("dpa", "single-shift dominant pole iteration");
  add_out(dpa, o);
  add_source(dpa, o);
  add_k(dpa, o);
  dpa->add_option("--s0-re", o.s0_re, "real part of the initial shift")->capture_default_str();
  dpa->add_option("--s0-im", o.s0_im, "imaginary part of the initial shift")->capture_default_str();
  dpa->add_option("--tol", o.tol, "residual tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  dpa->add_option("--max-iter", o.max_iter, "solve budget")->capture_default_str()->check(CLI::PositiveNumber);

  auto* sadpa = app.add_subcommand("sadpa", "subspace-accelerated dominant pole search with deflation");
  add_out(sadpa, o);
  add_source(sadpa, o);
  add_k(sadpa, o);
  sadpa->add_option("--s0", o.s0, "initial shifts, each re or re,im")->capture_default_str();
  sadpa->add_option("--n-want", o.n_want, "number of poles")->capture_default_str()->check(CLI::PositiveNumber);
  sadpa->add_option("--tol", o.tol, "residual tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  sadpa->add_option("--max-iter", o.max_iter, "solve budget")->capture_default_str()->check(CLI::PositiveNumber);

  auto* rom = app.add_subcommand("build-rom", "reduced model and LTI extension from found eigentriples");
  add_out(rom, o);
  add_source(rom, o);
  add_k(rom, o);
  rom->add_option("--partial-floquet", o.partial_floquet, "eigentriple file; <out>/partial_floquet.json by default");

  auto* sim = app.add_subcommand("simulate", "time response to u(t) = exp(sigma t), full vs reduced");
  add_out(sim, o);
  add_source(sim, o);
  sim->add_option("--rom", o.rom, "reduced model; <out>/rom.json by default");
  sim->add_option("--sigma", o.sigma, "input exponent")->capture_default_str();
  sim->add_option("--t-end", o.t_end, "final time")->capture_default_str();
  sim->add_option("--samples", o.samples, "grid points on [0, t-end]")->capture_default_str();

  auto* hinf = app.add_subcommand("hinf", "sampled H-infinity error of the reduced LTI extension");
  add_out(hinf, o);
  add_source(hinf, o);
  add_grid(hinf, o);
  add_k(hinf, o);
  hinf->add_option("--rom", o.rom, "reduced model; <out>/rom.json by default");

  auto* bt = app.add_subcommand("compare-bt", "dominant-pole truncation vs balanced truncation by order");
  add_out(bt, o);
  add_source(bt, o);
  add_grid(bt, o);
  add_k(bt, o);
  bt->add_option("--max-order", o.max_order, "largest reduced order")->capture_default_str();

  auto* phv = app.add_subcommand("phv-sweep", "harmonic projections of the steady-state response");
  add_out(phv, o);
  add_source(phv, o);
  add_k(phv, o);
  phv->add_option("--re", o.re, "real part of the shift line")->capture_default_str();
  phv->add_option("--nu-min", o.phv_nu_min, "first imaginary part")->capture_default_str();
  phv->add_option("--nu-max", o.phv_nu_max, "last imaginary part")->capture_default_str();
  phv->add_option("--points", o.phv_points, "shifts on the line")->capture_default_str();
  phv->add_option("--random", o.random, "draw this many shifts instead, Re in [re-min, re-max]")
      ->capture_default_str();
  phv->add_option("--re-min", o.re_min, "random shifts: smallest real part")->capture_default_str();
  phv->add_option("--re-max", o.re_max, "random shifts: largest real part")->capture_default_str();
  phv->add_option("--seed", o.seed, "random shifts: generator seed")->capture_default_str();

  auto* orc = app.add_subcommand("oracle-check", "Hill vs monodromy Floquet exponents (n <= 16)");
  add_out(orc, o);
  add_source(orc, o);
  orc->add_option("--tol", o.oracle_tol, "agreement tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    const fs::path out(o.out);
    fs::create_directories(out);
    Manifest m(name, echo_options(sub));
    int code = 0;
    try {
      if (sub == gen) code = run_generate(o, m, out);
      else if (sub == dpa) code = run_dpa(o, m, out);
      else if (sub == sadpa) code = run_sadpa(o, m, out);
      else if (sub == rom) code = run_build_rom(o, m, out);
      else if (sub == sim) code = run_simulate(o, m, out);
      else if (sub == hinf) code = run_hinf(o, m, out);
      else if (sub == bt) code = run_compare_bt(o, m, out);
      else if (sub == phv) code = run_phv_sweep(o, m, out);
      else code = run_oracle_check(o, m, out);
    } catch (const LtpError& e) {
      m.diag()["error"] = {{"kind", e.kind()}, {"message", e.what()}};
      m.write(out);
      throw;
    }
    m.write(out);
    return code;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << sub->help();
    return 2;
  } catch (const LtpError& e) {
    std::cerr << nlohmann::json{{"error", e.kind()}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "Failure"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}
