#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "ssmp/acceptance.hpp"
#include "ssmp/conditioning.hpp"
#include "ssmp/config.hpp"
#include "ssmp/cones.hpp"
#include "ssmp/errors.hpp"
#include "ssmp/fluctuation.hpp"
#include "ssmp/lamperti.hpp"
#include "ssmp/map_path.hpp"
#include "ssmp/parallel.hpp"
#include "ssmp/simd/kernels.hpp"
#include "ssmp/stationary.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace ssmp;

namespace {

constexpr const char* kVersion = "1.0.0";

const std::set<std::string> kExperiments{"simulate", "passage", "rho", "entrance", "cone", "check"};

bool is_spec_key(const std::string& k) {
  return k == "states" || k == "Q" || k == "drift" || k == "sigma" || k == "kill_rate" || k.rfind("jump[", 0) == 0 ||
         k.rfind("switch_jump[", 0) == 0;
}

// Reads parameters, remembers the effective values and rejects leftovers.
class Params {
 public:
  explicit Params(const KeyValueFile& kv) : kv_(kv) {}

  double num(const std::string& key, double fallback) {
    const double v = kv_.get_double(key, fallback);
    used_.insert(key);
    echo_[key] = v;
    return v;
  }
  double positive(const std::string& key, double fallback) {
    const double v = num(key, fallback);
    if (!(v > 0.0)) kv_.fail(key, "must be positive");
    return v;
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto v = kv_.get_u64(key, fallback);
    if (v == 0) kv_.fail(key, "must be at least 1");
    used_.insert(key);
    echo_[key] = v;
    return static_cast<std::size_t>(v);
  }
  std::uint32_t state(const std::string& key, std::size_t n_states) {
    const auto v = kv_.get_u64(key, 0);
    if (v >= n_states) kv_.fail(key, "state out of range (spec has " + std::to_string(n_states) + " states)");
    used_.insert(key);
    echo_[key] = v;
    return static_cast<std::uint32_t>(v);
  }
  std::vector<double> list(const std::string& key, std::vector<double> fallback) {
    auto v = kv_.get_doubles(key, std::move(fallback));
    if (v.empty()) kv_.fail(key, "needs at least one value");
    used_.insert(key);
    echo_[key] = v;
    return v;
  }
  MapSpec spec() {
    for (const auto& k : kv_.keys())
      if (is_spec_key(k)) used_.insert(k);
    MapSpec s = spec_from_config(kv_);
    echo_["spec"] = spec_to_text(s);
    return s;
  }
  void mark(const std::string& key) { used_.insert(key); }

  /// Every key must have been read by now.
  void finish() const {
    for (const auto& k : kv_.keys())
      if (!used_.count(k)) kv_.fail(k, "unknown key for this experiment");
  }
  const ordered_json& echo() const { return echo_; }
  const KeyValueFile& kv() const { return kv_; }

 private:
  const KeyValueFile& kv_;
  std::set<std::string> used_;
  ordered_json echo_ = ordered_json::object();
};

struct Outputs {
  ordered_json summary = ordered_json::object();
  std::map<std::string, std::string> files;
  int status = 0;
};

std::string record_csv(const std::vector<std::tuple<std::size_t, double, std::optional<PassageRecord>>>& rows) {
  std::ostringstream os;
  os << "replica,level,crossed,time,undershoot,overshoot,state_before,state_after,crept\n";
  for (const auto& [i, level, r] : rows) {
    os << i << ',' << format_double(level) << ',' << (r ? 1 : 0);
    if (r)
      os << ',' << format_double(r->time) << ',' << format_double(r->undershoot) << ',' << format_double(r->overshoot)
         << ',' << r->state_before << ',' << r->state_after << ',' << (r->crept ? 1 : 0);
    else
      os << ",,,,,,";
    os << '\n';
  }
  return os.str();
}

Outputs run_simulate(Params& p, RngStream rng, unsigned jobs) {
  const MapSpec spec = p.spec();
  const std::size_t n = p.count("n", 4);
  const double x0 = p.num("x0", 0.0);
  const std::uint32_t theta0 = p.state("theta0", spec.n_states());
  const double horizon = p.positive("horizon", 10.0);
  const double mesh = p.positive("mesh", 1e-3);
  const double alpha = p.positive("alpha", 1.0);
  p.finish();

  Outputs out;
  struct Pair {
    MapPath map;
    SsmpPath ss;
  };
  const auto paths = parallel_map<Pair>(n, jobs, [&](std::size_t i) {
    MapPath m = simulate_map(spec, x0, theta0, horizon, mesh, rng.fork(i));
    SsmpPath s = lamperti_kiu(m, alpha);
    return Pair{std::move(m), std::move(s)};
  });
  std::vector<double> ends;
  std::size_t killed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.files["map_path_" + std::to_string(i) + ".csv"] = path_to_csv(paths[i].map);
    out.files["ssmp_path_" + std::to_string(i) + ".csv"] = ssmp_to_csv(paths[i].ss);
    if (paths[i].map.killed())
      ++killed;
    else
      ends.push_back(paths[i].map.xi.back());
  }
  const Eigen::VectorXd pi = stationary_pi(spec.Q);
  out.summary["paths"] = n;
  out.summary["killed"] = killed;
  out.summary["stationary_pi"] = std::vector<double>(pi.data(), pi.data() + pi.size());
  out.summary["analytic_drift"] = analytic_drift(spec, pi);
  if (!ends.empty()) {
    const MeanSe m = mean_se(ends);
    out.summary["mean_end_xi"] = m.mean;
    out.summary["se_end_xi"] = m.se;
  }
  return out;
}

Outputs run_passage(Params& p, RngStream rng, unsigned jobs) {
  const MapSpec spec = p.spec();
  const std::size_t n = p.count("n", 10000);
  const double x0 = p.num("x0", 0.0);
  const std::uint32_t theta0 = p.state("theta0", spec.n_states());
  const auto levels = p.list("levels", {1.0, 5.0, 10.0});
  PassageOptions po;
  po.mesh = p.positive("mesh", 1e-3);
  po.t_max = p.positive("t_max", 1e4);
  po.bridge = p.num("bridge", 0.0) != 0.0;
  po.jobs = jobs;
  p.finish();

  const auto outcomes = parallel_map<PassageOutcome>(
      n, jobs, [&](std::size_t i) { return first_passages(spec, x0, theta0, levels, rng.fork(i), po); });
  std::vector<std::tuple<std::size_t, double, std::optional<PassageRecord>>> rows;
  Outputs out;
  ordered_json per_level = ordered_json::array();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    std::vector<PassageRecord> recs;
    for (std::size_t i = 0; i < n; ++i)
      if (outcomes[i].records[k]) recs.push_back(*outcomes[i].records[k]);
    std::size_t crept = 0;
    std::vector<double> over, under;
    for (const auto& r : recs) {
      crept += r.crept ? 1 : 0;
      over.push_back(r.overshoot);
      under.push_back(r.undershoot);
    }
    ordered_json j;
    j["level"] = levels[k];
    j["crossed"] = recs.size();
    j["not_crossed"] = n - recs.size();
    j["creeping_fraction"] = recs.empty() ? 0.0 : static_cast<double>(crept) / static_cast<double>(recs.size());
    if (!recs.empty()) {
      j["mean_overshoot"] = mean_se(over).mean;
      j["mean_undershoot"] = mean_se(under).mean;
    }
    per_level.push_back(j);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < levels.size(); ++k) rows.emplace_back(i, levels[k], outcomes[i].records[k]);
  out.files["passages.csv"] = record_csv(rows);
  out.summary["replicas"] = n;
  out.summary["levels"] = per_level;
  return out;
}

Outputs run_rho(Params& p, RngStream rng, unsigned jobs) {
  const MapSpec spec = p.spec();
  const std::size_t n = p.count("n", 10000);
  const std::uint32_t theta0 = p.state("theta0", spec.n_states());
  const auto levels = p.list("levels", {5.0, 10.0, 20.0});
  PassageOptions po;
  po.mesh = p.positive("mesh", 1e-3);
  po.t_max = p.positive("t_max", 1e4);
  po.jobs = jobs;
  p.finish();

  const RhoEstimate est = estimate_rho(spec, theta0, levels, n, rng, po);
  Outputs out;
  for (std::size_t k = 0; k < est.levels.size(); ++k)
    out.files["rho_level_" + format_double(est.levels[k]) + ".csv"] = est.per_level[k].to_csv();
  out.summary["replicas"] = n;
  out.summary["levels"] = est.levels;
  out.summary["consecutive_distance"] = est.consecutive_distance;
  out.summary["distance_to_deepest"] = est.distance_to_deepest;
  out.summary["not_crossed"] = est.not_crossed;
  return out;
}

Outputs run_entrance(Params& p, RngStream rng, unsigned jobs) {
  const MapSpec spec = p.spec();
  const double alpha = p.positive("alpha", 1.0);
  const std::size_t n = p.count("n", 1000);
  const std::size_t rho_n = p.count("rho_n", 10000);
  const double deep = p.positive("deep_level", 20.0);
  ConditionedOptions co;
  co.k_stop = p.positive("k_stop", 12.0);
  co.mesh = p.positive("mesh", 1e-2);
  co.min_acceptance = p.positive("min_acceptance", 1e-7);
  const auto radii = p.list("radii", {1.0, std::exp(-1.0)});
  const auto deltas = p.list("deltas", {0.05, 0.1, 0.2, 0.4});
  p.finish();
  for (double r : radii)
    if (!(r > 0.0 && r <= 1.0)) throw SpecError("radii must lie in (0, 1]");
  for (double d : deltas)
    if (!(d > 0.0 && d < 1.0)) throw SpecError("deltas must lie in (0, 1)");

  PassageOptions po;
  po.jobs = jobs;
  const auto rho = estimate_rho(spec, 0, {deep}, rho_n, rng.fork(0), po);
  const EntranceSetup setup = prepare_entrance(spec, alpha, rho.deepest(), co);
  const RngStream base = rng.fork(1);
  const auto samples =
      parallel_map<EntranceSample>(n, jobs, [&](std::size_t i) { return build_entrance_path(setup, base.fork(i)); });
  std::vector<SsmpPath> paths;
  double trunc = 0.0, attempts = 0.0;
  for (const auto& s : samples) {
    paths.push_back(s.path);
    trunc = std::max(trunc, s.truncation_mass);
    attempts += static_cast<double>(s.attempts);
  }
  Outputs out;
  for (double r : radii) out.files["entrance_exit_r" + format_double(r) + ".csv"] = exit_quadruples(paths, r).to_csv();
  std::vector<double> logd, logt;
  std::ostringstream tau;
  tau << "delta,mean_tau_min_1,se\n";
  for (double d : deltas) {
    std::vector<double> t;
    for (const auto& path : paths) t.push_back(std::min(exit_quadruple(path, d)->time, 1.0));
    const MeanSe m = mean_se(t);
    tau << format_double(d) << ',' << format_double(m.mean) << ',' << format_double(m.se) << '\n';
    logd.push_back(std::log(d));
    logt.push_back(std::log(m.mean));
  }
  out.files["entrance_tau.csv"] = tau.str();
  out.files["rho_deep.csv"] = rho.deepest().to_csv();
  out.summary["paths"] = n;
  out.summary["dual_drift"] = setup.dual_drift;
  out.summary["max_truncation_mass"] = trunc;
  out.summary["mean_attempts"] = attempts / static_cast<double>(n);
  if (deltas.size() >= 2) out.summary["tau_log_log_slope"] = fit_line(logd, logt).slope;
  return out;
}

Outputs run_cone(Params& p, RngStream rng, unsigned jobs) {
  const double theta0 = p.num("theta0", 1.5 * std::numbers::pi);
  const auto radii = p.list("radii", {1e-1, 1e-2, 1e-3});
  const std::size_t n = p.count("n", 10000);
  ConeWalkOptions wo;
  wo.dt = p.positive("dt", 1e-3);
  const std::size_t bootstrap = p.count("bootstrap", 200);
  p.finish();

  const ConeModel model = make_cone(theta0);
  const auto law = apex_exit_law(model, radii, n, rng.fork(0), wo, bootstrap, jobs);
  Outputs out;
  std::ostringstream os;
  os << "r0,angle\n";
  for (std::size_t k = 0; k < radii.size(); ++k)
    for (double a : law.angles[k].column(0)) os << format_double(radii[k]) << ',' << format_double(a) << '\n';
  out.files["cone_exit_angles.csv"] = os.str();
  out.summary["theta0"] = model.theta0;
  out.summary["lambda1"] = model.lambda1;
  out.summary["lambda1_shooting"] = eigen_first_shooting(model.theta0);
  out.summary["p"] = model.p;
  out.summary["harmonicity_residual_bisector"] =
      harmonicity_residual(model, std::cos(theta0 / 2), std::sin(theta0 / 2));
  out.summary["ks_to_smallest_radius"] = law.ks_to_smallest;
  out.summary["bootstrap_confidence"] = law.confidence;
  return out;
}

Outputs run_check(Params& p, std::uint64_t seed, unsigned jobs, const fs::path& dir) {
  BatteryOptions bo;
  bo.seed = seed;
  bo.jobs = jobs;
  bo.size = p.positive("size", 1.0);
  std::vector<int> ids;
  for (double v : p.list("criteria", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12})) {
    if (v != std::floor(v) || v < 1 || v > kCriteria) p.kv().fail("criteria", "entries must be 1.." + std::to_string(kCriteria));
    ids.push_back(static_cast<int>(v));
  }
  p.finish();
  bo.data_dir = dir;
  Outputs out;
  std::size_t failed = 0;
  ordered_json results = ordered_json::array();
  for (const auto& r : run_battery(bo, ids, [](const CriterionResult& r) { std::cout << summary_line(r) << std::endl; })) {
    failed += r.pass ? 0 : 1;
    results.push_back(ordered_json::parse(to_json(r).dump()));
  }
  out.summary["criteria"] = results;
  out.summary["failed"] = failed;
  out.status = failed ? 1 : 0;
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov additive processes and self-similar Markov processes: experiment runner"};
  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  unsigned jobs = 0;
  std::string out_root = "runs";
  app.add_option("--config", config_path, "experiment config file (key = value)")->required();
  app.add_option("--seed", seed_flag, "master seed (overrides the config key 'seed')");
  app.add_option("--jobs", jobs, "worker threads, 0 = all cores");
  app.add_option("--out", out_root, "output root; runs land in <out>/<experiment>_seed<seed>");
  CLI11_PARSE(app, argc, argv);

  try {
    const KeyValueFile kv = KeyValueFile::load(config_path);
    Params params(kv);
    const std::string experiment = kv.get_string("experiment", "");
    params.mark("experiment");
    if (!kExperiments.count(experiment)) {
      if (kv.has("experiment")) kv.fail("experiment", "unknown experiment '" + experiment + "'");
      kv.fail("experiment", "missing (one of simulate, passage, rho, entrance, cone, check)");
    }
    const std::uint64_t seed = seed_flag ? *seed_flag : kv.get_u64("seed", 1);
    params.mark("seed");

    const fs::path dir = fs::path(out_root) / (experiment + "_seed" + std::to_string(seed));
    const RngStream rng(seed, 0);
    Outputs out;
    if (experiment == "simulate")
      out = run_simulate(params, rng, jobs);
    else if (experiment == "passage")
      out = run_passage(params, rng, jobs);
    else if (experiment == "rho")
      out = run_rho(params, rng, jobs);
    else if (experiment == "entrance")
      out = run_entrance(params, rng, jobs);
    else if (experiment == "cone")
      out = run_cone(params, rng, jobs);
    else {
      fs::create_directories(dir);
      out = run_check(params, seed, jobs, dir);
    }

    fs::create_directories(dir);
    for (const auto& [name, text] : out.files) write_file(dir / name, text);
    ordered_json manifest;
    manifest["experiment"] = experiment;
    manifest["seed"] = seed;
    manifest["jobs"] = jobs;
    manifest["config_file"] = config_path;
    manifest["parameters"] = params.echo();
    manifest["versions"] = {{"ssmp", kVersion},
                            {"compiler", __VERSION__},
                            {"cxx", static_cast<long>(__cplusplus)},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                          "." + std::to_string(EIGEN_MINOR_VERSION)},
                            {"simd", std::string(simd::isa_name(simd::active_isa()))}};
    std::vector<std::string> names;
    for (const auto& [name, text] : out.files) names.push_back(name);
    manifest["data_files"] = names;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    ordered_json summary = out.summary;
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << dir.string() << std::endl;
    return out.status;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
