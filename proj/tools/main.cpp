// Command-line driver: builds reference distributions, diffusion
// densities, error metrics, and diagnostic sweeps, writing plot-ready
// CSV artifacts. Subcommands: density, reference, compare, sweep, diag.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "vndiff/coefficients.hpp"
#include "vndiff/csv.hpp"
#include "vndiff/density.hpp"
#include "vndiff/errors.hpp"
#include "vndiff/metrics.hpp"
#include "vndiff/models.hpp"
#include "vndiff/stein.hpp"

namespace fs = std::filesystem;
using namespace vndiff;

namespace {

struct Options {
  std::string model;
  double lambda = 9.0, mu = 1.0;
  int n = 10;
  int N = 16;
  double beta = 1.0;
  double alpha = 0.16;
  std::vector<std::string> variants;
  double eta = -1.0;  // auto
  double K = kInf;    // auto
  bool hybrid_fallback_v1 = false;
  double tol = 1e-10;
  std::uint64_t seed = 1;
  std::int64_t samples = 1'000'000;
  double tail_eps = 1e-8;
  double zmin = 0.0, zmax = 0.0;
  int zcount = 0;
  std::string sweep;
  std::string out;
};

std::string timestamp_dir() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", std::localtime(&t));
  return std::string("out/") + buf;
}

fs::path ensure_outdir(const Options& o) {
  fs::path dir = o.out.empty() ? fs::path(timestamp_dir()) : fs::path(o.out);
  fs::create_directories(dir);
  return dir;
}

struct ModelBundle {
  std::unique_ptr<ChainModel> model;
  std::optional<ErlangCParams> erlangc;
  std::optional<HospitalParams> hospital;
  std::optional<AR1Params> ar1;
  std::string params_str;
};

ModelBundle make_bundle(const Options& o) {
  ModelBundle b;
  if (o.model == "erlangc") {
    ErlangCParams p{o.lambda, o.mu, o.n};
    p.validate();
    b.model = make_erlangc_model(p);
    b.erlangc = p;
    b.params_str = p.str();
  } else if (o.model == "hospital") {
    HospitalParams p{o.N, o.beta};
    p.validate();
    b.model = make_hospital_model(p);
    b.hospital = p;
    b.params_str = p.str();
  } else if (o.model == "ar1") {
    AR1Params p{o.alpha};
    p.validate();
    b.model = make_ar1_model(p);
    b.ar1 = p;
    b.params_str = p.str();
  } else {
    throw std::invalid_argument("unknown model: '" + o.model + "' (erlangc|hospital|ar1)");
  }
  return b;
}

struct BuiltCoefficient {
  CoefficientFn fn;
  double detected_K = kInf;
};

BuiltCoefficient make_coefficient(const ModelBundle& b, Variant variant, const Options& o) {
  const ChainModel& m = *b.model;
  const double eta = o.eta > 0.0 ? o.eta : default_eta(m);
  BuiltCoefficient out;
  switch (variant) {
    case Variant::V0: out.fn = build_v0(m); return out;
    case Variant::V1: out.fn = build_v1(m); return out;
    case Variant::V2Lower: out.fn = build_v2_lower(m, eta); return out;
    case Variant::V2Upper: out.fn = build_v2_upper(m, eta); return out;
    case Variant::V3:
      if (b.hospital) {
        out.fn = build_v3_hospital(*b.hospital);
        return out;
      }
      if (b.ar1) {
        out.fn = build_v3_ar1(*b.ar1, eta);
        return out;
      }
      throw UnsupportedError("v3 is defined for the hospital and ar1 models only");
    case Variant::Hybrid: {
      if (!b.ar1) throw UnsupportedError("hybrid coefficient is defined for the ar1 model only");
      CoefficientFn raw3 = build_v3_ar1_raw(*b.ar1);
      CoefficientFn raw2 = o.hybrid_fallback_v1 ? build_v1(m) : build_v2_lower_raw(m);
      double K = o.K;
      if (!std::isfinite(K)) {
        // Scan window out to where a provisional truncated-v2 density dies.
        DensityOptions d;
        d.tol = 1e-8;
        auto prov = build_model_density(m, build_v2_lower(m, eta), d);
        const double lo = m.density_support().lo + 1e-9;
        K = find_hybrid_K(raw3, raw2, lo, prov.effective_support().hi);
      }
      out.fn = build_hybrid(raw3, raw2, K, eta);
      out.detected_K = K;
      return out;
    }
  }
  throw std::invalid_argument("unreachable variant");
}

LatticeDistribution make_reference(const ModelBundle& b, const Options& o) {
  if (b.erlangc) return erlangc_reference(*b.erlangc);
  if (b.hospital) return hospital_reference(*b.hospital, o.tail_eps);
  return ar1_reference(*b.ar1, o.samples, o.seed);
}

MetaList base_meta(const Options& o, const ModelBundle& b, const std::string& cmd) {
  MetaList meta;
  meta.push_back({"cmd", cmd});
  meta.push_back({"model", b.model->name()});
  meta.push_back({"params", b.params_str});
  meta.push_back({"tol", fmt17(o.tol)});
  meta.push_back({"seed", std::to_string(o.seed)});
  if (b.ar1) meta.push_back({"samples", std::to_string(o.samples)});
  if (b.hospital) meta.push_back({"tail_eps", fmt17(o.tail_eps)});
  return meta;
}

std::vector<double> cli_z_grid(const Options& o, const LatticeDistribution& ref) {
  if (o.zcount > 0) {
    std::vector<double> zs;
    for (int i = 0; i < o.zcount; ++i)
      zs.push_back(o.zmin + (o.zmax - o.zmin) * i / std::max(1, o.zcount - 1));
    return zs;
  }
  return default_z_grid(ref, TailSide::Right, 1e-6, 64);
}

int cmd_density(const Options& o) {
  auto b = make_bundle(o);
  if (o.variants.empty()) throw std::invalid_argument("density: need at least one --variant");
  const fs::path dir = ensure_outdir(o);
  for (const auto& vs : o.variants) {
    const Variant variant = variant_from_string(vs);
    auto built = make_coefficient(b, variant, o);
    DensityOptions opt;
    opt.tol = o.tol;
    auto d = build_model_density(*b.model, built.fn, opt);
    MetaList meta = base_meta(o, b, "density");
    meta.push_back({"variant", vs});
    meta.push_back({"eta", fmt17(built.fn.eta)});
    if (std::isfinite(built.detected_K)) meta.push_back({"K", fmt17(built.detected_K)});
    meta.push_back({"log_kappa", fmt17(d.log_kappa())});
    const std::string suffix = o.variants.size() > 1 ? "_" + vs : "";
    {
      std::ofstream f(dir / ("density" + suffix + ".csv"));
      write_density_csv(f, d, meta);
    }
    {
      std::ofstream f(dir / ("coefficient" + suffix + ".csv"));
      const Interval eff = d.effective_support();
      write_coefficient_csv(f, built.fn, eff.lo, eff.hi, 2001, meta);
    }
    std::fprintf(stderr, "density %s: support [%g, %g], log kappa %.6g\n", vs.c_str(),
                 d.effective_support().lo, d.effective_support().hi, d.log_kappa());
  }
  return 0;
}

int cmd_reference(const Options& o) {
  auto b = make_bundle(o);
  const fs::path dir = ensure_outdir(o);
  auto ref = make_reference(b, o);
  MetaList meta = base_meta(o, b, "reference");
  std::ofstream f(dir / "reference.csv");
  write_reference_csv(f, ref, meta);
  std::fprintf(stderr, "reference: %zu %s, mean %.6g\n", ref.size(),
               ref.is_sample() ? "samples" : "atoms", ref.mean());
  return 0;
}

int cmd_compare(const Options& o) {
  auto b = make_bundle(o);
  if (o.variants.empty()) throw std::invalid_argument("compare: need at least one --variant");
  const fs::path dir = ensure_outdir(o);
  auto ref = make_reference(b, o);

  std::unique_ptr<BlockBootstrap> boot;
  std::size_t slot_h = 0;
  const double log_shift = b.ar1 ? 1.0 / b.ar1->delta() : 0.0;
  const HTag h_tag = b.ar1 ? HTag::LogShift : HTag::Identity;
  if (ref.is_sample()) {
    boot = std::make_unique<BlockBootstrap>(ref.samples_raw(), 1000, o.seed);
    slot_h = boot->add_sum([log_shift](double x) { return std::log(x + log_shift); });
    boot->finalize();
  }

  ErrorReport rep;
  const double p1 = b.erlangc ? b.erlangc->R() : (b.hospital ? double(o.N) : o.alpha);
  auto zs = cli_z_grid(o, ref);
  for (const auto& vs : o.variants) {
    const Variant variant = variant_from_string(vs);
    auto built = make_coefficient(b, variant, o);
    DensityOptions opt;
    opt.tol = o.tol;
    auto d = build_model_density(*b.model, built.fn, opt);

    auto ee = expectation_error(ref, d, h_tag, log_shift);
    double se = 0.0;
    if (boot) {
      const double t = d.moment(h_tag, log_shift);
      se = boot->stderr_of(
          [&](const std::vector<double>& means) { return std::abs(t - means[slot_h]); });
    }
    rep.append({b.model->name(), vs,
                h_tag == HTag::LogShift ? "E_logshift_err" : "E_identity_err", p1, o.beta,
                ee.absolute, se});
    if (ee.relative) rep.append({b.model->name(), vs, "E_rel_err", p1, o.beta, *ee.relative, se});

    if (!ref.is_sample()) {
      rep.append({b.model->name(), vs, "kolmogorov", p1, o.beta, kolmogorov(ref, d), 0.0});
      rep.append({b.model->name(), vs, "wasserstein1", p1, o.beta, wasserstein1(ref, d), 0.0});
    }

    for (double z : zs) {
      const double ref_tail = ref.ccdf(z);
      if (ref_tail <= 0.0) continue;
      const double approx = d.ccdf(z);
      const double rel = std::abs(approx / ref_tail - 1.0);
      double zse = 0.0;
      if (boot) {
        BlockBootstrap tb(ref.samples_raw(), 1000, o.seed + 17);
        const auto slot = tb.add_sum([z](double x) { return x >= z ? 1.0 : 0.0; });
        tb.finalize();
        zse = tb.stderr_of([&](const std::vector<double>& means) {
          return means[slot] > 0 ? std::abs(approx / means[slot] - 1.0) : 0.0;
        });
      }
      rep.append({b.model->name(), vs, "ccdf_rel_err", z, p1, rel, zse});
    }
    std::fprintf(stderr, "compare %s: |E h(W)-E h(Y)| = %.3e\n", vs.c_str(), ee.absolute);
  }
  MetaList meta = base_meta(o, b, "compare");
  {
    std::ofstream f(dir / "metrics.csv");
    write_error_report_csv(f, rep, meta);
  }
  {
    std::ofstream f(dir / "metrics.json");
    write_error_report_json(f, rep, meta);
  }
  return 0;
}

// Sweep spec forms: "R=25,100,400,1600" | "N=16,64,256" |
// "alpha=0.64,0.32" | "n=5:100:20,rho=0.5:0.99:20".
struct SweepSpec {
  std::string var1;
  std::vector<double> vals1;
  std::string var2;
  std::vector<double> vals2;
};

std::vector<double> parse_axis(const std::string& rhs) {
  std::vector<double> vals;
  if (rhs.find(':') != std::string::npos) {
    double a, bb;
    int k;
    if (std::sscanf(rhs.c_str(), "%lf:%lf:%d", &a, &bb, &k) != 3 || k < 2)
      throw std::invalid_argument("sweep axis: want start:stop:count");
    for (int i = 0; i < k; ++i) vals.push_back(a + (bb - a) * i / (k - 1));
  } else {
    std::stringstream ss(rhs);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  }
  return vals;
}

SweepSpec parse_sweep(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("sweep: empty specification");
  SweepSpec spec;
  const auto second = s.find(",rho=");
  std::string first = s, rest;
  if (second != std::string::npos) {
    first = s.substr(0, second);
    rest = s.substr(second + 1);
  }
  auto parse_one = [](const std::string& part, std::string& var, std::vector<double>& vals) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("sweep: want var=values");
    var = part.substr(0, eq);
    vals = parse_axis(part.substr(eq + 1));
  };
  parse_one(first, spec.var1, spec.vals1);
  if (!rest.empty()) parse_one(rest, spec.var2, spec.vals2);
  if (spec.vals1.empty()) throw std::invalid_argument("sweep: empty axis");
  return spec;
}

int cmd_sweep(const Options& o) {
  const SweepSpec spec = parse_sweep(o.sweep);
  if (o.variants.empty()) throw std::invalid_argument("sweep: need at least one --variant");
  const fs::path dir = ensure_outdir(o);
  ErrorReport rep;
  std::map<std::string, std::vector<std::pair<double, double>>> fit_data;

  auto run_cell = [&](const Options& cell_opts, double param1, double param2) {
    auto b = make_bundle(cell_opts);
    auto ref = make_reference(b, cell_opts);
    const HTag h_tag = b.ar1 ? HTag::LogShift : HTag::Identity;
    const double log_shift = b.ar1 ? 1.0 / b.ar1->delta() : 0.0;
    for (const auto& vs : cell_opts.variants) {
      auto built = make_coefficient(b, variant_from_string(vs), cell_opts);
      DensityOptions opt;
      opt.tol = cell_opts.tol;
      auto d = build_model_density(*b.model, built.fn, opt);
      auto ee = expectation_error(ref, d, h_tag, log_shift);
      rep.append({b.model->name(), vs, "E_err", param1, param2, ee.absolute, 0.0});
      if (ee.relative)
        rep.append({b.model->name(), vs, "E_rel_err", param1, param2, *ee.relative, 0.0});
      fit_data[vs].push_back({param1, ee.absolute});
    }
  };

  std::string sweep_model;
  if (spec.var1 == "R") {
    sweep_model = "erlangc";
    for (double R : spec.vals1) {
      Options c = o;
      c.model = "erlangc";
      c.lambda = R;
      c.mu = 1.0;
      c.n = static_cast<int>(std::lround(R + o.beta * std::sqrt(R)));
      run_cell(c, R, o.beta);
    }
  } else if (spec.var1 == "N") {
    sweep_model = "hospital";
    for (double N : spec.vals1) {
      Options c = o;
      c.model = "hospital";
      c.N = static_cast<int>(std::lround(N));
      run_cell(c, N, o.beta);
    }
  } else if (spec.var1 == "alpha") {
    sweep_model = "ar1";
    for (double a : spec.vals1) {
      Options c = o;
      c.model = "ar1";
      c.alpha = a;
      run_cell(c, a, 0.0);
    }
  } else if (spec.var1 == "n" && spec.var2 == "rho") {
    sweep_model = "erlangc";
    for (double nn : spec.vals1) {
      for (double rho : spec.vals2) {
        Options c = o;
        c.model = "erlangc";
        c.n = static_cast<int>(std::lround(nn));
        c.mu = 1.0;
        c.lambda = rho * c.n;
        run_cell(c, nn, rho);
      }
    }
  } else {
    throw std::invalid_argument("sweep: unsupported axis " + spec.var1);
  }

  Options header_opts = o;
  header_opts.model = sweep_model;
  auto b0 = make_bundle(header_opts);
  MetaList meta = base_meta(o, b0, "sweep");
  meta.push_back({"sweep", o.sweep});
  {
    std::ofstream f(dir / "sweep.csv");
    write_error_report_csv(f, rep, meta);
  }
  if (spec.var2.empty() && spec.vals1.size() >= 4) {
    std::ofstream f(dir / "ratefit.csv");
    write_meta(f, meta);
    f << "variant,slope,intercept,r2\n";
    for (const auto& [vs, data] : fit_data) {
      std::vector<double> sc, er;
      for (auto [s, e] : data) {
        sc.push_back(s);
        er.push_back(e);
      }
      const auto fit = rate_fit(sc, er);
      f << vs << "," << fmt17(fit.slope) << "," << fmt17(fit.intercept) << "," << fmt17(fit.r2)
        << "\n";
      std::fprintf(stderr, "ratefit %s: slope %.3f (r2 %.4f)\n", vs.c_str(), fit.slope, fit.r2);
    }
  }
  return 0;
}

int cmd_diag(const Options& o) {
  const SweepSpec spec = parse_sweep(o.sweep);
  if (spec.var1 != "R") throw std::invalid_argument("diag: sweep must be over R");
  const fs::path dir = ensure_outdir(o);
  auto rep = moderate_deviation_curves(spec.vals1, o.beta, 0.5, o.tol);
  MetaList meta;
  meta.push_back({"cmd", "diag"});
  meta.push_back({"sweep", o.sweep});
  meta.push_back({"beta", fmt17(o.beta)});
  meta.push_back({"tol", fmt17(o.tol)});
  {
    std::ofstream f(dir / "md_curves.csv");
    write_md_report_csv(f, rep, meta);
  }
  {
    std::ofstream f(dir / "md_summary.csv");
    write_meta(f, meta);
    f << "R,side,variant,max_normalized\n";
    for (const auto& s : rep.summaries)
      f << fmt17(s.R) << "," << (s.side == TailSide::Right ? "right" : "left") << ","
        << (s.variant == PoissonVariant::V0 ? "v0" : "v1") << "," << fmt17(s.max_normalized)
        << "\n";
  }
  for (const auto& s : rep.summaries)
    std::fprintf(stderr, "diag R=%g %s %s: max normalized %.3f\n", s.R,
                 s.side == TailSide::Right ? "right" : "left",
                 s.variant == PoissonVariant::V0 ? "v0" : "v1", s.max_normalized);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order steady-state diffusion approximations for Markov chains"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "erlangc|hospital|ar1");
    sub->add_option("--lambda", o.lambda, "erlangc arrival rate");
    sub->add_option("--mu", o.mu, "erlangc service rate");
    sub->add_option("--n", o.n, "erlangc server count");
    sub->add_option("--N", o.N, "hospital server count");
    sub->add_option("--beta", o.beta, "slack parameter beta");
    sub->add_option("--alpha", o.alpha, "ar1 coefficient in (0,1)");
    sub->add_option("--variant", o.variants, "coefficient variant (repeatable)");
    sub->add_option("--eta", o.eta, "truncation floor (default 1e-3*v0)");
    sub->add_option("--K", o.K, "hybrid switch point (default auto)");
    sub->add_flag("--hybrid-fallback-v1", o.hybrid_fallback_v1,
                  "splice hybrid with v1 instead of v2");
    sub->add_option("--tol", o.tol, "quadrature tolerance")->check(CLI::Range(1e-12, 1e-6));
    sub->add_option("--seed", o.seed, "Monte Carlo seed");
    sub->add_option("--samples", o.samples, "Monte Carlo sample count");
    sub->add_option("--tail-eps", o.tail_eps, "hospital truncation tail bound");
    sub->add_option("--zmin", o.zmin, "tail grid start");
    sub->add_option("--zmax", o.zmax, "tail grid end");
    sub->add_option("--zcount", o.zcount, "tail grid size");
    sub->add_option("--sweep", o.sweep,
                    "sweep spec, e.g. R=25,100,400 or n=5:100:20,rho=0.5:0.99:20");
    sub->add_option("--out", o.out, "output directory (default out/<timestamp>)");
  };

  auto* density = app.add_subcommand("density", "tabulate a diffusion density and coefficient");
  auto* reference = app.add_subcommand("reference", "compute the reference distribution of W");
  auto* compare = app.add_subcommand("compare", "error metrics of variants against the reference");
  auto* sweep = app.add_subcommand("sweep", "parameter sweeps with rate fits");
  auto* diag = app.add_subcommand("diag", "moderate-deviation envelope diagnostics");
  for (auto* sub : {density, reference, compare, sweep, diag}) add_common(sub);

  try {
    app.parse(argc, argv);
    if (density->parsed()) return cmd_density(o);
    if (reference->parsed()) return cmd_reference(o);
    if (compare->parsed()) return cmd_compare(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (diag->parsed()) return cmd_diag(o);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
