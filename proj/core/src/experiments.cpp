#include "dpsbp/experiments.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <semaphore>
#include <sstream>

#include "dpsbp/diagnostics.hpp"

namespace dpsbp {

namespace {

using nlohmann::json;

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Convergence1d: return "convergence1d";
    case ExperimentKind::Convergence2d: return "convergence2d";
    case ExperimentKind::Forward1d: return "forward1d";
    case ExperimentKind::Forward2d: return "forward2d";
    case ExperimentKind::Inverse1d: return "inverse1d";
    case ExperimentKind::Inverse2d: return "inverse2d";
    case ExperimentKind::CertifyOps: return "certify_ops";
  }
  return "?";
}

ExperimentKind kind_from(const std::string& s) {
  for (ExperimentKind k :
       {ExperimentKind::Convergence1d, ExperimentKind::Convergence2d,
        ExperimentKind::Forward1d, ExperimentKind::Forward2d,
        ExperimentKind::Inverse1d, ExperimentKind::Inverse2d,
        ExperimentKind::CertifyOps})
    if (s == kind_name(k)) return k;
  fail(ErrorCode::InvalidConfig, "unknown experiment '" + s + "'");
}

TimeFlavor flavor_from(const std::string& s) {
  if (s == "minus") return TimeFlavor::Minus;
  if (s == "center") return TimeFlavor::Center;
  fail(ErrorCode::InvalidConfig, "unknown flavor '" + s + "' (minus|center)");
}

const char* flavor_name(TimeFlavor f) {
  return f == TimeFlavor::Minus ? "minus" : "center";
}

std::string flavor_pair_label(TimeFlavor i, TimeFlavor j) {
  auto one = [](TimeFlavor f) { return f == TimeFlavor::Minus ? "Dm" : "Dc"; };
  return std::string(one(i)) + one(j);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Paper-style experiment presets on [-1,1]^dim with T = 2 and Neumann faces.
WaveProblem preset_problem(int dim, double c, double sigma, bool gaussian) {
  WaveProblem p;
  p.dim = dim;
  p.final_time = 2.0;
  p.wave_speed = [c](double, double) { return c; };
  p.damping = [sigma](double, double) { return sigma; };
  if (gaussian) {
    if (dim == 1)
      p.initial_displacement = [](double x, double) { return std::exp(-100.0 * x * x); };
    else
      p.initial_displacement = [](double x, double y) {
        return std::exp(-8.0 * (x * x + y * y));
      };
  } else {
    p.initial_displacement = [dim](double x, double y) {
      double u = std::cos(M_PI * x);
      if (dim == 2) u *= std::cos(M_PI * y);
      return u;
    };
  }
  p.initial_velocity = [](double, double) { return 0.0; };
  return p;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path);
  return out;
}

std::vector<std::pair<TimeFlavor, TimeFlavor>> flavor_set(
    const ExperimentConfig& cfg) {
  if (cfg.flavors) return {*cfg.flavors};
  using F = TimeFlavor;
  return {{F::Minus, F::Minus}, {F::Minus, F::Center},
          {F::Center, F::Minus}, {F::Center, F::Center}};
}

int blocks_for(const ExperimentConfig& cfg, std::size_t delta_idx) {
  if (cfg.blocks.empty()) return 1;
  if (cfg.blocks.size() == 1) return cfg.blocks[0];
  return cfg.blocks.at(delta_idx);
}

int resolve_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("DPSBP_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

/// Run tasks with bounded concurrency; results land in submission order.
template <typename Task>
void run_tasks(std::vector<Task>& tasks, int threads) {
  if (threads <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::counting_semaphore<64> slots(std::min(threads, 64));
  std::vector<std::future<void>> futs;
  futs.reserve(tasks.size());
  for (auto& t : tasks) {
    slots.acquire();
    futs.push_back(std::async(std::launch::async, [&t, &slots] {
      t();
      slots.release();
    }));
  }
  for (auto& f : futs) f.get();
}

void run_convergence(const ExperimentConfig& cfg, int dim) {
  if (cfg.deltas.size() < 2)
    fail(ErrorCode::InvalidConfig, "convergence study needs >= 2 deltas");
  const auto pairs = flavor_set(cfg);
  std::vector<std::vector<double>> errs(pairs.size(),
                                        std::vector<double>(cfg.deltas.size()));
  std::vector<std::function<void()>> tasks;
  for (std::size_t pi = 0; pi < pairs.size(); ++pi)
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di)
      tasks.push_back([&, pi, di] {
        WaveProblem prob = preset_problem(dim, cfg.c, cfg.sigma, false);
        Grid g = make_uniform_grid(prob, cfg.order, cfg.deltas[di],
                                   blocks_for(cfg, di), pairs[pi].first,
                                   pairs[pi].second);
        Discretization d = discretize(prob, g, cfg.penalty);
        SolutionField u = solve_forward(d);
        errs[pi][di] = l2_error(u, exact_solution(dim, cfg.c, cfg.sigma), d);
      });
  run_tasks(tasks, resolve_threads(cfg));

  auto ecsv = open_out(cfg.out_dir, "errors.csv");
  ecsv << "delta";
  for (const auto& pr : pairs) ecsv << ',' << flavor_pair_label(pr.first, pr.second);
  ecsv << '\n';
  for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
    ecsv << fmt(cfg.deltas[di]);
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) ecsv << ',' << fmt(errs[pi][di]);
    ecsv << '\n';
  }
  auto rcsv = open_out(cfg.out_dir, "rates.csv");
  rcsv << "flavor,rate\n";
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di)
      pts.emplace_back(cfg.deltas[di], errs[pi][di]);
    rcsv << flavor_pair_label(pairs[pi].first, pairs[pi].second) << ','
         << fmt(convergence_rate(pts)) << '\n';
  }
}

void write_snapshot(const ExperimentConfig& cfg, const Discretization& d,
                    const SolutionField& u, double t, int index) {
  const Grid& g = d.grid;
  const double bt = g.block_duration();
  const int b = std::min<int>(g.n_blocks - 1, static_cast<int>(t / bt));
  const double local = (t - b * bt) / g.dt;
  const Index k = static_cast<Index>(std::llround(local));
  if (std::abs(local - static_cast<double>(k)) > 1e-9 || k < 0 || k >= g.m)
    fail(ErrorCode::InvalidConfig, "snapshot time " + fmt(t) + " is not a grid node");
  Vector slice = u.slice(b, k);
  auto out = open_out(cfg.out_dir, "snapshot_t" + std::to_string(index) + ".csv");
  out << (g.dim == 2 ? "x,y,u\n" : "x,u\n");
  for (Index ix = 0; ix < g.nx; ++ix)
    for (Index iy = 0; iy < g.ny; ++iy) {
      out << fmt(d.x_coords[ix]);
      if (g.dim == 2) out << ',' << fmt(d.y_coords[iy]);
      out << ',' << fmt(slice[ix * g.ny + iy]) << '\n';
    }
}

void run_forward(const ExperimentConfig& cfg, int dim) {
  if (cfg.deltas.size() != 1)
    fail(ErrorCode::InvalidConfig, "forward run expects exactly one delta");
  WaveProblem prob = preset_problem(dim, cfg.c, cfg.sigma, true);
  auto fl = cfg.flavors.value_or(
      std::make_pair(TimeFlavor::Minus, TimeFlavor::Minus));
  Grid g = make_uniform_grid(prob, cfg.order, cfg.deltas[0], blocks_for(cfg, 0),
                             fl.first, fl.second);
  Discretization d = discretize(prob, g, cfg.penalty);
  SolutionField u = solve_forward(d);

  EnergyTrace tr = energy_trace(u, d);
  auto ecsv = open_out(cfg.out_dir, "energy.csv");
  ecsv << "k,energy,boundary_term,damping_term\n";
  ecsv << "0," << fmt(tr.initial_energy) << ",0,0\n";
  for (std::size_t k = 0; k + 1 < tr.energy.size(); ++k)
    ecsv << k + 1 << ',' << fmt(tr.energy[k + 1]) << ',' << fmt(tr.boundary[k])
         << ',' << fmt(tr.damping[k]) << '\n';
  int index = 0;
  for (double t : cfg.snapshot_times) write_snapshot(cfg, d, u, t, index++);
}

void run_inverse(const ExperimentConfig& cfg, int dim) {
  if (cfg.deltas.size() != 1)
    fail(ErrorCode::InvalidConfig, "inverse run expects exactly one delta");
  WaveProblem prob = preset_problem(dim, cfg.c, cfg.sigma, true);
  auto fl = cfg.flavors.value_or(
      std::make_pair(TimeFlavor::Minus, TimeFlavor::Minus));
  Grid g = make_uniform_grid(prob, cfg.order, cfg.deltas[0], blocks_for(cfg, 0),
                             fl.first, fl.second);
  Discretization d = discretize(prob, g, cfg.penalty);

  // synthetic observations from the true initial data (inverse crime setup)
  SolutionField u_true = solve_forward(d);
  Observations obs = extract_observations(d, u_true);
  write_observations_csv(cfg.out_dir + "/observations.csv", obs, d);

  InverseOptions iopts;
  iopts.max_iter = cfg.max_iter;
  iopts.form = cfg.objective_form;
  const Vector init = Vector::Ones(g.n_space());
  InverseState st = optimize(d, obs, init, iopts, d.f0);

  auto mcsv = open_out(cfg.out_dir, "misfit.csv");
  mcsv << "iteration,misfit,error\n";
  for (std::size_t i = 0; i < st.misfit_history.size(); ++i)
    mcsv << i << ',' << fmt(st.misfit_history[i]) << ','
         << (i < st.error_history.size() ? fmt(st.error_history[i]) : "") << '\n';
  for (std::size_t i = 0; i < st.iterates.size(); ++i) {
    auto fcsv = open_out(cfg.out_dir, "f_iter" + std::to_string(i) + ".csv");
    fcsv << (dim == 2 ? "x,y,f_value\n" : "x,f_value\n");
    for (Index ix = 0; ix < g.nx; ++ix)
      for (Index iy = 0; iy < g.ny; ++iy) {
        fcsv << fmt(d.x_coords[ix]);
        if (dim == 2) fcsv << ',' << fmt(d.y_coords[iy]);
        fcsv << ',' << fmt(st.iterates[i][ix * g.ny + iy]) << '\n';
      }
  }
  if (st.status == InverseStatus::LineSearchFailure)
    std::cerr << "{\"warning\":\"line search failed at iteration "
              << st.iterations << "; partial history written\"}\n";
}

void run_certify(const ExperimentConfig& cfg) {
  auto csv = open_out(cfg.out_dir, "certify.csv");
  csv << "kind,order,n,sbp_identity_max_abs,dissipativity_eig,interior_poly_rel_"
         "err,min_norm_entry,boundary_row_degree,pass\n";
  bool all = true;
  std::vector<int> orders =
      cfg.order > 0 ? std::vector<int>{cfg.order} : std::vector<int>{2, 4, 6, 8};
  for (int order : orders) {
    for (Index n : {Index(21), Index(41), Index(81)}) {
      SbpTriplet sp = build_space_triplet(order, n, 2.0 / double(n - 1));
      AssumptionReport r = verify_space(sp);
      all = all && r.pass();
      csv << "space," << order << ',' << n << ',' << fmt(r.sbp_identity_max_abs)
          << ',' << fmt(r.dissipativity_eig) << ',' << fmt(r.interior_poly_rel_err)
          << ',' << fmt(r.min_norm_entry) << ',' << r.boundary_row_degree << ','
          << (r.pass() ? 1 : 0) << '\n';
      for (TimeFlavor f : {TimeFlavor::Minus, TimeFlavor::Center}) {
        TimeOps tm = build_time_ops(order, n, 2.0 / double(n - 1), f, f);
        AssumptionReport rt = verify_time(tm);
        all = all && rt.pass();
        csv << "time_" << flavor_name(f) << ',' << order << ',' << n << ','
            << fmt(rt.sbp_identity_max_abs) << ',' << fmt(rt.dissipativity_eig)
            << ',' << fmt(rt.interior_poly_rel_err) << ','
            << fmt(rt.min_norm_entry) << ',' << rt.boundary_row_degree << ','
            << (rt.pass() ? 1 : 0) << '\n';
      }
    }
  }
  std::cout << (all ? "certification PASS\n" : "certification FAIL\n");
  if (!all) fail(ErrorCode::InvalidConfig, "operator certification failed");
}

void validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  if (cfg.order != 2 && cfg.order != 4 && cfg.order != 6 && cfg.order != 8 &&
      !(cfg.experiment == ExperimentKind::CertifyOps && cfg.order == 0))
    problems.push_back("order must be one of 2, 4, 6, 8");
  if (cfg.sigma < 0) problems.push_back("sigma must be nonnegative");
  if (cfg.c == 0) problems.push_back("c must be nonzero");
  for (double dl : cfg.deltas)
    if (!(dl > 0)) problems.push_back("deltas must be positive");
  for (int b : cfg.blocks)
    if (b < 1) problems.push_back("blocks must be >= 1");
  if (!cfg.blocks.empty() && cfg.blocks.size() != 1 &&
      cfg.blocks.size() != cfg.deltas.size())
    problems.push_back("blocks must have one entry or one per delta");
  try {
    cfg.penalty.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (cfg.max_iter < 0) problems.push_back("max_iter must be nonnegative");
  if (cfg.experiment != ExperimentKind::CertifyOps && cfg.deltas.empty())
    problems.push_back("deltas must not be empty");
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    fail(ErrorCode::InvalidConfig, msg);
  }
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = kind_name(experiment);
  j["order"] = order;
  if (flavors)
    j["flavors"] = {flavor_name(flavors->first), flavor_name(flavors->second)};
  j["sigma"] = sigma;
  j["c"] = c;
  j["deltas"] = deltas;
  j["blocks"] = blocks;
  j["penalty"] = {{"mu1", penalty.mu1}, {"mu2", penalty.mu2},
                  {"mu3", penalty.mu3}, {"mu4", penalty.mu4},
                  {"tau_l", penalty.tau_l}, {"tau_r", penalty.tau_r}};
  j["objective_form"] =
      objective_form == ObjectiveForm::Printed ? "printed" : "symmetric";
  j["max_iter"] = max_iter;
  j["snapshot_times"] = snapshot_times;
  j["out_dir"] = out_dir;
  j["threads"] = threads;
  return j.dump(2);
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // map byte offset to a line number
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(text.size(), e.byte); ++i)
      if (text[i] == '\n') ++line;
    fail(ErrorCode::ParseError,
         origin + ":" + std::to_string(line) + ": " + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (!j.contains("experiment"))
      fail(ErrorCode::ParseError, origin + ": missing required field 'experiment'");
    cfg.experiment = kind_from(j.at("experiment").get<std::string>());
    if (!j.contains("order")) {
      if (cfg.experiment != ExperimentKind::CertifyOps)
        fail(ErrorCode::ParseError, origin + ": missing required field 'order'");
      cfg.order = 0;  // certify: all orders
    } else {
      cfg.order = j.at("order").get<int>();
    }
    if (j.contains("flavors")) {
      auto arr = j.at("flavors");
      if (!arr.is_array() || arr.size() != 2)
        fail(ErrorCode::ParseError, origin + ": flavors must be a 2-array");
      cfg.flavors = {flavor_from(arr[0].get<std::string>()),
                     flavor_from(arr[1].get<std::string>())};
    }
    cfg.sigma = j.value("sigma", 0.0);
    cfg.c = j.value("c", 1.0);
    cfg.deltas = j.value("deltas", std::vector<double>{});
    cfg.blocks = j.value("blocks", std::vector<int>{});
    if (j.contains("penalty")) {
      auto p = j.at("penalty");
      const double mu1 = p.value("mu1", -1.0);
      const double mu3 = p.value("mu3", -1.0);
      cfg.penalty = PenaltyConfig::with_mu(mu1, mu3);
      if (p.contains("mu2")) cfg.penalty.mu2 = p["mu2"].get<double>();
      if (p.contains("mu4")) cfg.penalty.mu4 = p["mu4"].get<double>();
      if (p.contains("tau_l")) cfg.penalty.tau_l = p["tau_l"].get<double>();
      if (p.contains("tau_r")) cfg.penalty.tau_r = p["tau_r"].get<double>();
    }
    const std::string form = j.value("objective_form", std::string("printed"));
    if (form == "printed") cfg.objective_form = ObjectiveForm::Printed;
    else if (form == "symmetric") cfg.objective_form = ObjectiveForm::Symmetric;
    else fail(ErrorCode::ParseError, origin + ": objective_form must be printed|symmetric");
    cfg.max_iter = j.value("max_iter", 10);
    if (j.contains("snapshot_times"))
      cfg.snapshot_times = j.at("snapshot_times").get<std::vector<double>>();
    cfg.out_dir = j.value("out_dir", std::string("."));
    cfg.threads = j.value("threads", 0);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, origin + ": " + e.what());
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

int run(const ExperimentConfig& cfg) {
  try {
    switch (cfg.experiment) {
      case ExperimentKind::Convergence1d: run_convergence(cfg, 1); break;
      case ExperimentKind::Convergence2d: run_convergence(cfg, 2); break;
      case ExperimentKind::Forward1d: run_forward(cfg, 1); break;
      case ExperimentKind::Forward2d: run_forward(cfg, 2); break;
      case ExperimentKind::Inverse1d: run_inverse(cfg, 1); break;
      case ExperimentKind::Inverse2d: run_inverse(cfg, 2); break;
      case ExperimentKind::CertifyOps: run_certify(cfg); break;
    }
  } catch (const Error& e) {
    std::cerr << "{\"error\":" << static_cast<int>(e.code()) << ",\"message\":\""
              << e.what() << "\"}\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":-1,\"message\":\"" << e.what() << "\"}\n";
    return 1;
  }
  return 0;
}

}  // namespace dpsbp
