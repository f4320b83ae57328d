// Experiment driver: every analysis in the library behind one executable
// with reproducible (config, seed) -> byte-identical outputs.
//
// Exit codes: 0 all checks in scope pass, 1 a check failed (or a run aborted),
// 2 usage / config error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ldamix/certificate.hpp"
#include "ldamix/chains.hpp"
#include "ldamix/counts.hpp"
#include "ldamix/coupling.hpp"
#include "ldamix/csvio.hpp"
#include "ldamix/exact.hpp"
#include "ldamix/fit.hpp"
#include "ldamix/landscape.hpp"
#include "ldamix/paths.hpp"
#include "ldamix/posterior.hpp"
#include "ldamix/rng.hpp"
#include "ldamix/version.hpp"

namespace {

using nlohmann::ordered_json;

struct Options {
  std::vector<int> ms;
  double kappa = 0.25;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  long t_max = 2000000;
  std::string out;
  std::string kernel;  // empty = per-subcommand default
  int cap = 0;         // 0 = per-subcommand default
  std::string start = "mode";
  long thin = 1000;
  int grid = 100;
  double margin = 0.02;
  int mesh = 2000;
  int xi_points = 10000;
  int hessian_points = 1000;
  int replicas = 1000;
  int top_edges = 10;
  int slack = 3;
  bool phase1 = false;
  bool audit = false;
};

// Config mistakes that should exit 2 rather than 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int single_m(const Options& opt) {
  if (opt.ms.size() != 1)
    throw UsageError("this subcommand takes exactly one --m value");
  return opt.ms.front();
}

int effective_cap(const Options& opt, int subcommand_default) {
  return opt.cap > 0 ? opt.cap : subcommand_default;
}

ldamix::KernelKind kernel_kind(const std::string& name,
                               const std::string& fallback) {
  const std::string k = name.empty() ? fallback : name;
  if (k == "L") return ldamix::KernelKind::lumped_l;
  if (k == "Z") return ldamix::KernelKind::metropolis_z;
  throw UsageError("--kernel must be L or Z here");
}

std::string meta_lines(
    const std::string& tool, const Options& opt,
    const std::vector<std::pair<std::string, std::string>>& extra) {
  std::string s;
  s += "# tool=ldamix-" + tool + "\n";
  s += std::string("# version=") + ldamix::kVersion + "\n";
  s += "# seed=" + std::to_string(opt.seed) +
       " stream=" + std::to_string(opt.stream) + "\n";
  for (const auto& [k, v] : extra) s += "# " + k + "=" + v + "\n";
  return s;
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty()) {
    std::cout << content;
    return;
  }
  ldamix::write_file_atomic(out, content);
  std::cerr << "wrote " << out << "\n";
}

std::string fmt(double v) { return ldamix::format_sig17(v); }

long start_index(const std::string& start, const ldamix::StateSpace& space,
                 const ldamix::DensityTable& table, ldamix::KernelKind kind) {
  if (start == "mode") return ldamix::mode_index(space, table, kind);
  if (start == "zero") return space.index(ldamix::Count4(0, 0, 0, 0));
  int a = 0, b = 0, c = 0, d = 0;
  if (std::sscanf(start.c_str(), "%d,%d,%d,%d", &a, &b, &c, &d) != 4)
    throw UsageError("--start must be mode, zero, or k11,k12,k21,k22");
  const ldamix::Count4 k(a, b, c, d);
  if (!space.contains(k)) throw UsageError("--start state outside the grid");
  return space.index(k);
}

// ---------------------------------------------------------------- posterior

int run_posterior(const Options& opt) {
  const int m = single_m(opt);
  const ldamix::StateSpace space =
      ldamix::StateSpace::benchmark(m, effective_cap(opt, 60));
  const ldamix::DensityTable table(ldamix::benchmark_corpus(m));
  const Eigen::VectorXd pi_l =
      ldamix::stationary_vector(space, table, ldamix::KernelKind::lumped_l);
  const Eigen::VectorXd pi_z = ldamix::stationary_vector(
      space, table, ldamix::KernelKind::metropolis_z);

  ldamix::CsvWriter csv("k11,k12,k21,k22,log_pi_r,log_pi_l,log_pi_z,pi_l,pi_z");
  for (long i = 0; i < space.size; ++i) {
    const ldamix::Count4 k = space.state(i);
    csv.cell(int(k[0])).cell(int(k[1])).cell(int(k[2])).cell(int(k[3]));
    csv.cell(double(table.log_pi_r(k)));
    csv.cell(double(table.log_pi_l(k)));
    csv.cell(double(table.log_pi_z(k)));
    csv.cell(pi_l[i]).cell(pi_z[i]);
    csv.end_row();
  }
  emit(opt.out, meta_lines("posterior", opt, {{"m", std::to_string(m)}}) +
                    csv.content());
  return 0;
}

// ---------------------------------------------------------------- mix-exact

int run_mix_exact(const Options& opt) {
  const int m = single_m(opt);
  const auto kind = kernel_kind(opt.kernel, "L");
  const ldamix::StateSpace space =
      ldamix::StateSpace::benchmark(m, effective_cap(opt, 60));
  const ldamix::DensityTable table(ldamix::benchmark_corpus(m));
  const ldamix::SparseKernel kernel =
      ldamix::build_kernel(space, table, kind);
  const Eigen::VectorXd pi = ldamix::stationary_vector(space, table, kind);
  const long start = start_index(opt.start, space, table, kind);

  const std::vector<double> curve =
      ldamix::tv_curve(kernel, pi, start, opt.t_max, opt.kappa);
  long tau = -1;
  for (size_t t = 0; t < curve.size(); ++t)
    if (curve[t] <= opt.kappa) {
      tau = long(t);
      break;
    }
  const double gap = ldamix::spectral_gap(space, kernel, pi);

  ldamix::CsvWriter csv("t,tv");
  for (size_t t = 0; t < curve.size(); ++t) {
    csv.cell(long(t)).cell(curve[t]);
    csv.end_row();
  }
  std::vector<std::pair<std::string, std::string>> extra = {
      {"m", std::to_string(m)},
      {"kernel", kind == ldamix::KernelKind::lumped_l ? "L" : "Z"},
      {"kappa", fmt(opt.kappa)},
      {"start", opt.start},
      {"tau", std::to_string(tau)},
      {"gap", fmt(gap)},
      {"trel", fmt(1.0 / gap)}};
  emit(opt.out, meta_lines("mix-exact", opt, extra) + csv.content());
  if (tau < 0) {
    std::cerr << "tv did not reach kappa=" << opt.kappa << " within t-max="
              << opt.t_max << "\n";
    return 1;
  }
  return 0;
}

// ----------------------------------------------------------------- simulate

int run_simulate(const Options& opt) {
  const int m = single_m(opt);
  const ldamix::CorpusCounts corpus = ldamix::benchmark_corpus(m);
  const ldamix::DensityTable table(corpus);

  ldamix::ChainConfig config;
  config.seed = opt.seed;
  config.stream = opt.stream;
  const std::string kname = opt.kernel.empty() ? "L" : opt.kernel;
  ldamix::KernelKind mode_kind = ldamix::KernelKind::lumped_l;
  if (kname == "R") {
    config.kind = ldamix::ChainKind::full_r;
  } else if (kname == "L") {
    config.kind = ldamix::ChainKind::lumped_l;
  } else if (kname == "Z") {
    config.kind = ldamix::ChainKind::metropolis_z;
    mode_kind = ldamix::KernelKind::metropolis_z;
  } else {
    throw UsageError("--kernel must be R, L, or Z for simulate");
  }

  // mode/zero starts need the enumerated grid; explicit starts do not.
  Eigen::MatrixXi start_counts(2, 2);
  {
    const ldamix::StateSpace space =
        ldamix::StateSpace::benchmark(m, std::max(effective_cap(opt, 60), m));
    const ldamix::Count4 k =
        space.state(start_index(opt.start, space, table, mode_kind));
    start_counts << k[0], k[1], k[2], k[3];
  }

  const ldamix::Trajectory traj = ldamix::simulate_trajectory(
      config, corpus, start_counts, opt.t_max, opt.thin);
  ldamix::CsvWriter csv("t,k11,k12,k21,k22");
  for (size_t i = 0; i < traj.t.size(); ++i) {
    csv.cell(traj.t[i]);
    for (int c = 0; c < 4; ++c) csv.cell(int(traj.k[i][c]));
    csv.end_row();
  }
  emit(opt.out, meta_lines("simulate", opt,
                           {{"m", std::to_string(m)},
                            {"chain", kname},
                            {"steps", std::to_string(opt.t_max)},
                            {"thin", std::to_string(opt.thin)},
                            {"start", opt.start}}) +
                    csv.content());
  return 0;
}

// ---------------------------------------------------------------- landscape

int run_landscape(const Options& opt) {
  const int n = opt.grid;
  if (n < 2) throw UsageError("--grid must be at least 2");
  // The ridge is flat everywhere, but the transversal curvature diverges at
  // the box walls, where finite differences lose their accuracy; the grid
  // therefore keeps an interior margin (the eigen checks are statements
  // about interior points).
  const double margin = opt.margin;
  if (!(margin >= 0 && 2 * margin < ldamix::kBoxA))
    throw UsageError("--margin must be in [0, 0.15)");

  ldamix::CsvWriter csv(
      "u,v,g,grad_inf,interior,fd_lambda1,fd_lambda2,fd_zero_resid,"
      "cf_lambda1,cf_lambda2,cf_vs_fd_rel");
  double g_min = std::numeric_limits<double>::infinity(), g_max = -g_min;
  double max_grad = 0, max_zero = 0, worst_neg = -g_min, max_rel = 0;
  long interior_points = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = margin + (ldamix::kBoxA - 2 * margin) *
                                    double(i + 1) / double(n + 1);
      const double v = ldamix::kBoxC + margin +
                       (1.0 - ldamix::kBoxC - 2 * margin) * double(j + 1) /
                           double(n + 1);
      const ldamix::SurfaceParam s{u, v};
      const ldamix::Norm4 p = ldamix::surface_point(s);
      const double g = ldamix::g_value(p);
      const double grad = ldamix::g_gradient(p).cwiseAbs().maxCoeff();
      const bool interior = ldamix::surface_fd_safe(p);
      const ldamix::HessianResult fd = ldamix::hessian_eigen(
          s, ldamix::HessianMethod::kFiniteDifference,
          std::min(1e-3, margin / 2));
      const ldamix::ClosedFormEigen cf = ldamix::closed_form_eigen(u, v);
      const double rel =
          std::max(std::abs(cf.lambda1 - fd.lambda1) / std::abs(fd.lambda1),
                   std::abs(cf.lambda2 - fd.lambda2) / std::abs(fd.lambda2));
      const double zero_resid = fd.zero_residuals.cwiseAbs().maxCoeff();
      g_min = std::min(g_min, g);
      g_max = std::max(g_max, g);
      max_grad = std::max(max_grad, grad);
      if (interior) {
        // Eigen checks are statements about interior points; rows near a
        // coordinate wall are reported but not aggregated.
        ++interior_points;
        max_zero = std::max(max_zero, zero_resid);
        worst_neg = std::max(worst_neg, fd.lambda2);
        max_rel = std::max(max_rel, rel);
      }
      csv.cell(u).cell(v).cell(g).cell(grad).cell(int(interior));
      csv.cell(fd.lambda1).cell(fd.lambda2).cell(zero_resid);
      csv.cell(cf.lambda1).cell(cf.lambda2).cell(rel);
      csv.end_row();
    }
  }
  const double spread = g_max - g_min;
  const bool pass = spread < 1e-9 && max_grad < 1e-7 && max_zero < 1e-5 &&
                    worst_neg < -3.0 && max_rel < 1e-4 && interior_points > 0;
  emit(opt.out,
       meta_lines("landscape", opt,
                  {{"grid", std::to_string(n)},
                   {"margin", fmt(margin)},
                   {"interior_points", std::to_string(interior_points)},
                   {"g_spread", fmt(spread)},
                   {"max_grad_inf", fmt(max_grad)},
                   {"max_zero_resid", fmt(max_zero)},
                   {"max_transversal_eig", fmt(worst_neg)},
                   {"max_closed_vs_fd_rel", fmt(max_rel)},
                   {"checks_pass", pass ? "1" : "0"}}) +
           csv.content());
  if (!pass) std::cerr << "landscape checks failed\n";
  return pass ? 0 : 1;
}

// ----------------------------------------------------------- appendix-check

int run_appendix_check(const Options& opt) {
  ldamix::CertificateReport report =
      ldamix::certificate_checks(opt.mesh, opt.xi_points, opt.seed);

  // Hessian eigenstructure on random interior surface points, plus the
  // closed-form/finite-difference agreement and the denominator report.
  ldamix::CounterRng rng(opt.seed, /*stream=*/3);
  const double margin = 0.02;
  double max_zero = 0, worst_neg = -std::numeric_limits<double>::infinity();
  double max_rel = 0;
  double ratio_min = std::numeric_limits<double>::infinity(), ratio_max = 0;
  for (int i = 0; i < opt.hessian_points; ++i) {
    // Rejection-sample interior points: every entropy argument of g bounded
    // away from its singular endpoints, so the FD stencil is trustworthy.
    double u = 0, v = 0;
    for (;;) {
      u = margin + (ldamix::kBoxA - 2 * margin) * rng.next_double();
      v = ldamix::kBoxC + margin +
          (1.0 - ldamix::kBoxC - 2 * margin) * rng.next_double();
      if (ldamix::surface_fd_safe(ldamix::surface_point({u, v}))) break;
    }
    const ldamix::SurfaceParam s{u, v};
    const ldamix::HessianResult fd = ldamix::hessian_eigen(
        s, ldamix::HessianMethod::kFiniteDifference, margin / 2);
    const ldamix::ClosedFormEigen cf = ldamix::closed_form_eigen(u, v);
    max_zero = std::max(max_zero, fd.zero_residuals.cwiseAbs().maxCoeff());
    worst_neg = std::max(worst_neg, fd.lambda2);
    max_rel =
        std::max(max_rel,
                 std::max(std::abs(cf.lambda1 - fd.lambda1) / std::abs(fd.lambda1),
                          std::abs(cf.lambda2 - fd.lambda2) / std::abs(fd.lambda2)));
    const double ratio =
        ldamix::delta_dectic(u, v) / ldamix::delta_sextic(u, v);
    ratio_min = std::min(ratio_min, ratio);
    ratio_max = std::max(ratio_max, ratio);
  }
  report.items.push_back({"hessian-zero-pair", max_zero < 1e-5, max_zero, 1e-5,
                          std::to_string(opt.hessian_points) +
                              " random interior surface points"});
  report.items.push_back({"hessian-negative-pair", worst_neg < -3.0, worst_neg,
                          -3.0, "largest transversal eigenvalue"});
  report.items.push_back({"hessian-closed-vs-fd", max_rel < 1e-4, max_rel,
                          1e-4, "relative, both transversal eigenvalues"});
  // The published sextic denominator disagrees with the validated dectic one
  // by a position-dependent factor; the check passes when that mismatch is
  // detected (and therefore reported), since the closed form ships with the
  // validated denominator.
  report.items.push_back(
      {"hessian-denominator-mismatch-reported", ratio_max / ratio_min > 1.1,
       ratio_max / ratio_min, 1.1,
       "dectic/sextic ratio range [" + fmt(ratio_min) + ", " + fmt(ratio_max) +
           "]; position-dependent, so the sextic is a transcription error"});

  ordered_json doc;
  doc["meta"] = {{"tool", "ldamix-appendix-check"},
                 {"version", ldamix::kVersion},
                 {"seed", opt.seed},
                 {"stream", opt.stream},
                 {"mesh", opt.mesh},
                 {"xi_points", opt.xi_points},
                 {"hessian_points", opt.hessian_points}};
  doc["checks"] = ordered_json::array();
  for (const auto& item : report.items)
    doc["checks"].push_back({{"name", item.name},
                             {"pass", item.pass},
                             {"observed", item.observed},
                             {"threshold", item.threshold},
                             {"detail", item.detail}});
  doc["all_pass"] = report.all_pass();
  emit(opt.out, doc.dump(2) + "\n");
  if (!report.all_pass()) std::cerr << "appendix checks failed\n";
  return report.all_pass() ? 0 : 1;
}

// -------------------------------------------------------------------- paths

int run_paths(const Options& opt) {
  const int m = single_m(opt);
  const auto kind = kernel_kind(opt.kernel, "Z");
  const ldamix::StateSpace space =
      ldamix::StateSpace::benchmark(m, effective_cap(opt, 20));
  const ldamix::DensityTable table(ldamix::benchmark_corpus(m));
  const ldamix::LevelSets levels = ldamix::level_sets(space, table);
  const ldamix::SparseKernel kernel =
      ldamix::build_kernel(space, table, kind);
  const Eigen::VectorXd pi = ldamix::stationary_vector(space, table, kind);
  const Eigen::VectorXd log_z = ldamix::log_density_vector(
      space, table, ldamix::KernelKind::metropolis_z);

  ldamix::PathFamily family =
      ldamix::build_paths(space, levels, log_z, opt.slack);
  const ldamix::CongestionResult cong =
      ldamix::path_congestion(family, kernel, pi, opt.top_edges);
  const ldamix::EdgeAudit audit = ldamix::audit_edge_phases(family);
  const std::vector<ldamix::CutRecord> cuts =
      ldamix::conductance_cuts(space, kernel, pi, levels);

  const double phi_lb = ldamix::conductance_from_congestion(cong.rho);
  double min_cut_phi = std::numeric_limits<double>::infinity();
  for (const auto& cut : cuts) min_cut_phi = std::min(min_cut_phi, cut.phi);

  // Measured profile from the tested cuts: Phi(r) = min phi over cuts of
  // mass <= r, tabulated at the distinct masses.
  std::vector<ldamix::CutRecord> sorted = cuts;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.mass < b.mass; });
  ldamix::ConductanceProfile profile;
  double running = std::numeric_limits<double>::infinity();
  for (const auto& cut : sorted) {
    running = std::min(running, cut.phi);
    if (!profile.r.empty() && profile.r.back() == cut.mass) {
      profile.phi.back() = running;
    } else {
      profile.r.push_back(cut.mass);
      profile.phi.push_back(running);
    }
  }

  const long mode = ldamix::mode_index(space, table, kind);
  const double mp =
      ldamix::bound_morris_peres(profile, pi.minCoeff(), opt.kappa);
  const double sj =
      ldamix::bound_sinclair_jerrum(phi_lb, pi[mode], opt.kappa);
  const long tau =
      ldamix::mixing_time(kernel, pi, mode, opt.kappa, opt.t_max);

  bool congestion_below_cuts = true;
  for (const auto& cut : cuts)
    if (phi_lb > cut.phi) congestion_below_cuts = false;
  const bool pass = congestion_below_cuts && double(tau) <= mp &&
                    double(tau) <= sj && cong.stats.pairs > 0;

  ldamix::CsvWriter csv("name,value");
  auto row = [&csv](const std::string& name, const std::string& value) {
    csv.cell(name).cell(value);
    csv.end_row();
  };
  row("pairs", std::to_string(cong.stats.pairs));
  row("fallbacks", std::to_string(cong.stats.fallbacks));
  row("fallback_rate",
      fmt(double(cong.stats.fallbacks) / double(cong.stats.pairs)));
  row("alpha_clamps", std::to_string(cong.stats.alpha_clamps));
  row("clipped_rays", std::to_string(cong.stats.clipped_rays));
  row("fallback_level_exits", std::to_string(cong.stats.fail_level));
  row("fallback_box_exits", std::to_string(cong.stats.fail_box));
  row("max_path_len", std::to_string(cong.stats.max_len));
  row("rho", fmt(cong.rho));
  row("argmax_edge_x", std::to_string(cong.argmax.x));
  row("argmax_edge_axis", std::to_string(cong.argmax.axis));
  row("edges_used", std::to_string(audit.edges_used));
  row("edges_multi_phase", std::to_string(audit.edges_multi_phase));
  row("max_phase_classes", std::to_string(audit.max_phase_classes));
  row("phi_lower_bound", fmt(phi_lb));
  row("min_cut_phi", fmt(min_cut_phi));
  row("cuts_tested", std::to_string(long(cuts.size())));
  row("bound_profile", fmt(mp));
  row("bound_flat", fmt(sj));
  row("tau", std::to_string(tau));
  for (size_t i = 0; i < cong.top_edges.size(); ++i) {
    const auto& e = cong.top_edges[i];
    row("edge_" + std::to_string(i),
        std::to_string(e.x) + ";axis=" + std::to_string(e.axis) +
            ";rho=" + fmt(e.rho()));
  }
  emit(opt.out, meta_lines("paths", opt,
                           {{"m", std::to_string(m)},
                            {"kernel", kind == ldamix::KernelKind::lumped_l
                                           ? "L"
                                           : "Z"},
                            {"kappa", fmt(opt.kappa)},
                            {"slack", std::to_string(opt.slack)},
                            {"checks_pass", pass ? "1" : "0"}}) +
                    csv.content());
  if (!pass) std::cerr << "paths checks failed\n";
  return pass ? 0 : 1;
}

// ------------------------------------------------------------------- couple

int run_couple(const Options& opt) {
  const int m = single_m(opt);
  const int cap = effective_cap(opt, 100);

  ldamix::CsvWriter csv("replica,phase1_T,phase2_T,total_T");
  double mean = 0, variance = 0;
  long t_max_seen = 0;
  bool any_increase = false;
  bool all_met = true;
  int replicas = opt.replicas;

  if (opt.phase1) {
    // Full two-phase runs from independent stationary draws.
    const ldamix::StateSpace space = ldamix::StateSpace::benchmark(m, cap);
    const ldamix::CorpusCounts corpus = ldamix::benchmark_corpus(m);
    const ldamix::DensityTable table(corpus);
    const Eigen::VectorXd pi =
        ldamix::stationary_vector(space, table, ldamix::KernelKind::lumped_l);
    ldamix::StationaryAssignmentSampler sampler(space, pi, corpus);
    double sum = 0, sumsq = 0;
    for (int rep = 0; rep < replicas; ++rep) {
      ldamix::CounterRng rng(opt.seed, std::uint64_t(1000 + rep));
      ldamix::CoupledPair pair = ldamix::CoupledPair::make(
          sampler.draw(rng), sampler.draw(rng));
      const long t1 = ldamix::phase1_until_lumped_meet(pair, opt.t_max, rng);
      if (t1 < 0) {
        all_met = false;
        csv.cell(rep).cell(-1L).cell(-1L).cell(-1L);
        csv.end_row();
        continue;
      }
      ldamix::begin_phase2(pair);
      const long before = pair.disagreements;
      const long t2 = ldamix::phase2_until_coalesced(
          pair, std::max(opt.t_max, 100000000L), rng, opt.audit);
      if (pair.disagreements > before) any_increase = true;
      csv.cell(rep).cell(t1).cell(t2).cell(t1 + t2);
      csv.end_row();
      const double total = double(t1 + t2);
      sum += total;
      sumsq += total * total;
      t_max_seen = std::max(t_max_seen, t1 + t2);
    }
    mean = sum / double(replicas);
    variance = replicas > 1
                   ? (sumsq - sum * sum / double(replicas)) / double(replicas - 1)
                   : 0.0;
  } else {
    ldamix::CouplingRunConfig config;
    config.m = m;
    config.replicas = replicas;
    config.seed = opt.seed;
    config.t_limit = opt.t_max;
    config.exact_cap = cap;
    config.audit = opt.audit;
    const ldamix::CouplingSummary summary =
        ldamix::run_phase2_experiment(config);
    for (int rep = 0; rep < replicas; ++rep) {
      csv.cell(rep).cell(0L).cell(summary.times[size_t(rep)]);
      csv.cell(summary.times[size_t(rep)]);
      csv.end_row();
    }
    mean = summary.mean;
    variance = summary.variance;
    t_max_seen = summary.t_max;
    any_increase = summary.any_d_increase;
  }

  const double mean_bound = 3.0 * m * std::log(double(m));
  const double var_bound = 7.0 * double(m) * double(m);
  const bool pass = all_met && !any_increase &&
                    (opt.phase1 || (mean <= mean_bound && variance < var_bound));
  emit(opt.out, meta_lines("couple", opt,
                           {{"m", std::to_string(m)},
                            {"replicas", std::to_string(replicas)},
                            {"phase1", opt.phase1 ? "1" : "0"},
                            {"mean", fmt(mean)},
                            {"variance", fmt(variance)},
                            {"t_max_seen", std::to_string(t_max_seen)},
                            {"mean_bound_3mlogm", fmt(mean_bound)},
                            {"var_bound_7m2", fmt(var_bound)},
                            {"d_never_increased", any_increase ? "0" : "1"},
                            {"checks_pass", pass ? "1" : "0"}}) +
                    csv.content());
  if (!pass) std::cerr << "coupling checks failed\n";
  return pass ? 0 : 1;
}

// ------------------------------------------------------------------ scaling

int run_scaling(const Options& opt) {
  if (opt.ms.empty()) throw UsageError("scaling needs at least one --m");
  std::set<int> unique(opt.ms.begin(), opt.ms.end());
  const auto kind = kernel_kind(opt.kernel, "L");
  const int cap = effective_cap(opt, 60);

  ldamix::CsvWriter csv("m,tau,gap,trel");
  std::vector<std::pair<double, double>> tau_pts, trel_pts;
  for (int m : unique) {
    const ldamix::StateSpace space = ldamix::StateSpace::benchmark(m, cap);
    const ldamix::DensityTable table(ldamix::benchmark_corpus(m));
    const ldamix::SparseKernel kernel =
        ldamix::build_kernel(space, table, kind);
    const Eigen::VectorXd pi = ldamix::stationary_vector(space, table, kind);
    const long mode = ldamix::mode_index(space, table, kind);
    const long tau =
        ldamix::mixing_time(kernel, pi, mode, opt.kappa, opt.t_max);
    const double gap = ldamix::spectral_gap(space, kernel, pi);
    csv.cell(m).cell(tau).cell(gap).cell(1.0 / gap);
    csv.end_row();
    tau_pts.emplace_back(double(m), double(tau));
    trel_pts.emplace_back(double(m), 1.0 / gap);
    std::cerr << "m=" << m << " tau=" << tau << " gap=" << gap << "\n";
  }

  std::vector<std::pair<std::string, std::string>> extra = {
      {"kernel", kind == ldamix::KernelKind::lumped_l ? "L" : "Z"},
      {"kappa", fmt(opt.kappa)}};
  bool pass = true;
  if (unique.size() >= 3) {
    const ldamix::PowerFit tf = ldamix::fit_power_law(tau_pts);
    const ldamix::PowerFit rf = ldamix::fit_power_law(trel_pts);
    extra.push_back({"tau_slope", fmt(tf.slope)});
    extra.push_back({"tau_r2", fmt(tf.r2)});
    extra.push_back({"trel_slope", fmt(rf.slope)});
    extra.push_back({"trel_r2", fmt(rf.r2)});
    extra.push_back({"slope_window", "[1.6,2.4]"});
    pass = tf.slope >= 1.6 && tf.slope <= 2.4 && tf.r2 > 0.98 &&
           rf.slope >= 1.6 && rf.slope <= 2.4;
  } else {
    extra.push_back({"fit", "skipped (needs >= 3 m values)"});
  }
  extra.push_back({"checks_pass", pass ? "1" : "0"});
  emit(opt.out, meta_lines("scaling", opt, extra) + csv.content());
  if (!pass) std::cerr << "scaling slope outside the expected window\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{
      "Exact and simulated mixing analysis of a two-topic Gibbs sampler "
      "benchmark family"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file");

  app.add_option("--m", opt.ms, "document length(s), each divisible by 10")
      ->delimiter(',');
  app.add_option("--kappa", opt.kappa, "TV threshold in (0,1)");
  app.add_option("--seed", opt.seed, "RNG seed");
  app.add_option("--stream", opt.stream, "RNG stream id");
  app.add_option("--t-max", opt.t_max, "step / search horizon");
  app.add_option("--out", opt.out, "output file (stdout when omitted)");
  app.add_option("--kernel", opt.kernel, "chain kernel: L, Z (R for simulate)");
  app.add_option("--cap", opt.cap, "largest m enumerated exactly");
  app.add_option("--start", opt.start, "start state: mode, zero, or k11,k12,k21,k22");
  app.add_option("--thin", opt.thin, "trajectory recording stride");
  app.add_option("--grid", opt.grid, "landscape grid resolution per axis");
  app.add_option("--margin", opt.margin,
                 "interior margin for landscape eigen checks");
  app.add_option("--mesh", opt.mesh, "positivity witness mesh per axis");
  app.add_option("--xi-points", opt.xi_points, "identity spot-check count");
  app.add_option("--hessian-points", opt.hessian_points,
                 "random surface points for eigen checks");
  app.add_option("--replicas", opt.replicas, "coupling replica count");
  app.add_option("--top-edges", opt.top_edges, "congested edges to report");
  app.add_option("--slack", opt.slack,
                 "paths: level-set containment latitude in shells");
  app.add_flag("--phase1", opt.phase1, "couple: run phase 1 and 2 end to end");
  app.add_flag("--audit", opt.audit, "couple: validate invariants every step");

  CLI::App* sub_posterior = app.add_subcommand("posterior", "density tables");
  CLI::App* sub_mix = app.add_subcommand("mix-exact", "tv curves, tau, gap");
  CLI::App* sub_sim = app.add_subcommand("simulate", "chain trajectories");
  CLI::App* sub_land = app.add_subcommand("landscape", "surface grids and eigenvalues");
  CLI::App* sub_appx = app.add_subcommand("appendix-check", "certificate pass/fail report");
  CLI::App* sub_paths = app.add_subcommand("paths", "canonical-path congestion");
  CLI::App* sub_couple = app.add_subcommand("couple", "coupling times");
  CLI::App* sub_scaling = app.add_subcommand("scaling", "multi-m sweep with log-log fits");
  for (CLI::App* sub : {sub_posterior, sub_mix, sub_sim, sub_land, sub_appx,
                        sub_paths, sub_couple, sub_scaling})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (opt.ms.empty())
      opt.ms = app.got_subcommand(sub_scaling) ? std::vector<int>{10, 20, 30, 40}
                                               : std::vector<int>{10};
    for (int m : opt.ms)
      if (m <= 0 || m % 10 != 0) throw UsageError("m must be divisible by 10");
    if (!(opt.kappa > 0.0 && opt.kappa < 1.0))
      throw UsageError("kappa must be in (0,1)");
    if (opt.replicas < 1) throw UsageError("replicas must be positive");
    if (opt.t_max < 1) throw UsageError("t-max must be positive");
    if (opt.slack < 0) throw UsageError("slack must be >= 0");

    if (app.got_subcommand(sub_posterior)) return run_posterior(opt);
    if (app.got_subcommand(sub_mix)) return run_mix_exact(opt);
    if (app.got_subcommand(sub_sim)) return run_simulate(opt);
    if (app.got_subcommand(sub_land)) return run_landscape(opt);
    if (app.got_subcommand(sub_appx)) return run_appendix_check(opt);
    if (app.got_subcommand(sub_paths)) return run_paths(opt);
    if (app.got_subcommand(sub_couple)) return run_couple(opt);
    if (app.got_subcommand(sub_scaling)) return run_scaling(opt);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
