// Acceptance run: one PASS/FAIL line per criterion, with the measured values underneath.
// Exit status is nonzero only when a check fails that is not listed as a known gap.

#include <datashare/continuum.hpp>
#include <datashare/largemarket.hpp>
#include <datashare/stylized.hpp>
#include <datashare/verify.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#ifndef DATASHARE_CLI
#error "DATASHARE_CLI must point at the datashare executable"
#endif
#ifndef DATASHARE_CONFIGS
#error "DATASHARE_CONFIGS must point at the sample config directory"
#endif

using namespace datashare;
namespace fs = std::filesystem;

namespace {

struct Check
{
  std::string label;
  bool        pass  = false;
  bool        known = false;  // documented gap, reported but not fatal
};

struct Criterion
{
  std::string        title;
  double             budget_s = 0.0;
  std::vector<Check> checks;
  double             seconds = 0.0;

  Criterion(std::string t, double budget)
    : title(std::move(t))
    , budget_s(budget)
  {}

  void check(bool ok, std::string label, bool known_gap = false)
  {
    checks.push_back({std::move(label), ok, known_gap});
  }
};

std::string fmt(char const *f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

WeightedVirtual uniform_weighted(double eta_r, double eta_w = 0.0)
{
  return {TypeDistribution::uniform(), WelfareWeight(1.0 - eta_r - eta_w, eta_w, eta_r)};
}

WeightedVirtual uniform_revenue()
{
  return uniform_weighted(1.0);
}

// ---------------------------------------------------------------------------------------------

void classic(Criterion &c)
{
  auto const wv = uniform_revenue();
  auto const b  = classic_benchmarks(wv);
  c.check(std::abs(b.monopoly_price - 0.5) <= 1e-8, fmt("monopoly price %.12g (0.5 +- 1e-8)", b.monopoly_price));

  // Trade boundary: buyer type tying each seller type below the seller's band.
  ScoringRule const buyer(wv, b.bilateral_level[0]);
  ScoringRule const seller(wv, b.bilateral_level[1]);
  double worst = 0.0;
  for (int k = 1; k < 50; ++k)
  {
    double const t2 = seller.tie_interval().first * k / 50.0;
    worst = std::max(worst, std::abs(buyer.type_for_score(seller.score(t2)) - t2 - 0.5));
  }
  c.check(worst <= 1e-8, fmt("bilateral boundary theta1 - theta2 = 0.5, worst deviation %.3g (tol 1e-8)", worst));

  c.check(std::abs(b.partnership_level - 0.5) <= 1e-8 && std::abs(b.partnership_band[0] - 0.25) <= 1e-8 &&
            std::abs(b.partnership_band[1] - 0.75) <= 1e-8,
          fmt("partnership level %.12g band [%.12g, %.12g] (0.5, [0.25, 0.75] +- 1e-8)", b.partnership_level,
              b.partnership_band[0], b.partnership_band[1]));
}

void bundling(Criterion &c)
{
  BundlingExample const ex(0.8);
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  c.check(near(ex.ratio, 0.25) && near(ex.level, 0.25) && near(ex.band_lo, 0.125) && near(ex.band_hi, 0.625) &&
            near(ex.tie_share1, 0.75),
          fmt("alpha11=0.8: nu=%.12g zB=%.12g band=(%.12g, %.12g) p1=%.12g (tol 1e-12)", ex.ratio, ex.level,
              ex.band_lo, ex.band_hi, ex.tie_share1));

  auto const [gain, se] = ex.simulated_gain(400000, 20260101);
  c.check(gain > 3.0 * se, fmt("bundled - separate revenue, Monte Carlo %.6f +- %.6f (closed form %.6f), > 3 sigma",
                               gain, se, ex.bundled_revenue() - ex.separate_revenue()));

  // Approach 2/3 from above.
  std::string trail;
  double last = 0.0;
  for (double d : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6})
  {
    BundlingExample const e(2.0 / 3.0 + d);
    last = e.bundled_revenue() - e.separate_revenue();
    trail += fmt(" %.4f", last);
  }
  c.check(std::abs(last) <= 1e-3,
          "revenue difference as alpha11 -> 2/3 from above:" + trail + " (limit alpha11/16 = 0.0417, not 0)", true);
}

void round_trip(Criterion &c)
{
  auto const wv = uniform_revenue();
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::map<std::string, int> per_branch;
  int sampled = 0;
  double worst = 0.0;
  std::size_t const cap = 9;
  while (sampled < 50)
  {
    double const roll = u(eng);
    double b1 = roll < 0.15 ? 0.0 : 0.98 * u(eng);
    double b2 = roll < 0.15 || roll > 0.75 ? 0.0 : (1.0 - b1) * 0.98 * u(eng);
    if (b2 > b1)
    {
      std::swap(b1, b2);
    }
    double const r = b1 + (1.0 - b1 - b2) * u(eng);
    auto const d   = TwoMerchantData::from_excess(b1, b2, r);
    auto const s   = solve_two_merchant(d, wv, wv);
    std::string const key = std::string(to_string(s.which)) + "/" + s.branch;
    if (per_branch[key] >= static_cast<int>(cap))
    {
      continue;
    }
    ++per_branch[key];
    ++sampled;
    auto const m = two_merchant_mechanism(d, s, wv);
    for (std::size_t i = 0; i < 2; ++i)
    {
      if (s.attains[i])
      {
        double const t = ScoringRule(wv, s.level[i]).critical_type();
        worst = std::max(worst, std::abs(m.interim_clicks(i, t) - d.to_dataset().outside_option(i)));
      }
    }
  }
  std::string branches;
  for (auto const &[k, n] : per_branch)
  {
    branches += fmt(" %s:%d", k.c_str(), n);
  }
  c.check(per_branch.size() >= 6, "50 instances over branches" + branches);
  c.check(worst <= 1e-3, fmt("max |S(critical) - a| where attained: %.3g (tol 1e-3)", worst));

  // Positive floor: the merchant without excess keeps its exclusives and ends above its outside option.
  auto const wvf = uniform_weighted(0.4, 0.6);
  double margin = std::numeric_limits<double>::infinity();
  int exceptions = 0;
  for (double e : {0.2, 0.3, 0.4})
  {
    TwoMerchantData const d{e, 0.0, 1.0 - 1.5 * e, 0.5 * e};
    auto const s = solve_two_merchant(d, wvf, wvf);
    auto const m = two_merchant_mechanism(d, s, wvf);
    for (std::size_t i = 0; i < 2; ++i)
    {
      if (!s.attains[i])
      {
        ++exceptions;
        double const t = ScoringRule(wvf, s.level[i]).critical_type();
        margin = std::min(margin, m.interim_clicks(i, t) - d.to_dataset().outside_option(i));
      }
    }
  }
  c.check(exceptions == 3 && margin > 1e-3,
          fmt("%d exception instances, min S(critical) - a = %.4f (> 0)", exceptions, margin));
}

void continuum_levels(Criterion &c)
{
  auto const wv = uniform_revenue();
  std::vector<double> const eps{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
  auto solve = [&](double l1, double e) {
    Law const law = Law::uniform(e, 1.0);
    return solve_optz(ContinuumModel({{l1, 1.0 - l1}, {{law, law}, {law, law}}}, {wv, wv}));
  };
  std::vector<double> half;
  std::vector<std::pair<double, double>> skew;
  double residual = 0.0;
  for (double e : eps)
  {
    auto const a = solve(0.5, e);
    auto const b = solve(0.8, e);
    half.push_back(a.level[0]);
    skew.emplace_back(b.level[0], b.level[1]);
    for (auto const &r : {a, b})
    {
      for (double v : r.residual)
      {
        residual = std::max(residual, std::abs(v));
      }
    }
  }
  c.check(residual <= 1e-6, fmt("largest level-equation residual %.3g (tol 1e-6)", residual));
  c.check(std::abs(half.back() - 0.5) < 0.02, fmt("z(0.99) = %.6f, |z - 0.5| < 0.02", half.back()));
  bool ordered = true;
  for (auto const &[z1, z2] : skew)
  {
    ordered = ordered && z1 > z2;
  }
  c.check(ordered, fmt("lambda=(0.8, 0.2): z1 > z2 at all %zu eps (z at 0.99: %.4f, %.4f)", eps.size(),
                       skew.back().first, skew.back().second));
  bool mono = true;
  for (std::size_t k = 1; k < eps.size(); ++k)
  {
    mono = mono && half[k] > half[k - 1] && skew[k].first > skew[k - 1].first && skew[k].second > skew[k - 1].second;
  }
  c.check(mono, fmt("levels increase in eps for both splits (z(0) = %.4f, z(0.99) = %.4f)", half.front(), half.back()));
}

void market_size(Criterion &c)
{
  auto const wv = uniform_revenue();
  std::string trail;
  double prev = 0.0;
  bool increasing = true;
  double last = 0.0;
  for (std::size_t N : {2, 5, 10, 25, 50, 100, 200})
  {
    SymmetricModel const s(wv, Law::uniform(0.0, 1.0), N);
    last = s.solve(1e-6);
    increasing = increasing && last > prev;
    prev = last;
    trail += fmt(" %zu:%.4f", N, last);
  }
  c.check(increasing, "z_N strictly increasing:" + trail);
  double const z3000 = SymmetricModel(wv, Law::uniform(0.0, 1.0), 3000).solve(1e-6);
  c.check(last > 0.95, fmt("z_200 = %.4f > 0.95 (the level first exceeds 0.95 between N=2000 and N=3000; z_3000 = %.4f)",
                           last, z3000),
          true);
}

void large_market(Criterion &c)
{
  auto config = [](double r, double mu) {
    LargeMarketConfig cfg;
    cfg.eta      = WelfareWeight(1.0 - r, 0.0, r);
    cfg.mean_ctr = mu;
    return cfg;
  };
  double worst = 0.0;
  for (double r : {1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.99, 1.0})
  {
    worst = std::max(worst, std::abs(design(config(r, 0.5)).sell_price - 1.0 / (1.0 + r)));
  }
  c.check(worst <= 1e-10, fmt("p_S = 1/(1 + eta_r), worst error %.3g (tol 1e-10)", worst));

  bool weak = true, strict = true;
  double min_gain = std::numeric_limits<double>::infinity();
  for (double r : {0.5, 1.0})
  {
    for (int k = 1; k <= 50; ++k)
    {
      auto const cfg  = config(r, k / 50.0);
      auto const d    = design(cfg);
      double const g  = combined_profit(cfg, d.sell_price) - selling_profit(cfg, d.bid_ask_price);
      weak = weak && g >= -1e-12;
      if (k < 50)
      {
        strict   = strict && g > 0.0;
        min_gain = std::min(min_gain, g);
      }
    }
  }
  c.check(weak && strict,
          fmt("exchange-market profit gain over bid-ask on mu = k/50: >= 0 everywhere, min over mu < 1 = %.3g", min_gain));

  double const near0 = efficiency(config(0.99, 1e-6)).ratio;
  c.check(near0 > 0.98, fmt("ARE(mu=1e-6, eta_r=0.99) = %.6f > 0.98", near0));
  double top = 0.0;
  for (double r : {0.01, 0.5, 0.99})
  {
    for (int k = 1; k < 50; ++k)
    {
      top = std::max(top, efficiency(config(r, k / 50.0)).ratio);
    }
  }
  c.check(top < 1.0, fmt("largest interior ARE %.6f < 1", top));
}

void limits(Criterion &c)
{
  auto const wv = uniform_revenue();
  auto const at100 = finite_limit(wv, Law::uniform(0.0, 1.0), {100}, 201).front();
  c.check(at100.step_error <= 0.05,
          fmt("N=100: sup |N S - step| = %.3f (tol 0.05); %.3f away from the band [%.3f, %.3f] and the top type",
              at100.step_error, at100.step_error_outside, at100.band_lo, at100.band_hi),
          true);

  auto const pts = finite_limit(wv, Law::uniform(0.0, 1.0), {100, 1000, 10000, 100000}, 41);
  std::string trail;
  double prev = std::numeric_limits<double>::infinity();
  bool decreasing = true;
  double rel = 0.0;
  for (auto const &p : pts)
  {
    rel = std::abs(p.selling_transfer - p.selling_target) / std::abs(p.selling_target);
    decreasing = decreasing && rel < prev;
    prev = rel;
    trail += fmt(" %zu:%.1f%%", p.merchants, 100.0 * rel);
  }
  c.check(decreasing && rel <= 0.05,
          fmt("selling-side transfer vs -p_S mu F(p_S) = %.4f, relative error by N:", pts.back().selling_target) + trail);
}

void verification(Criterion &c)
{
  auto const wv = uniform_revenue();
  auto build = [&](TwoMerchantData const &d, std::size_t grid) {
    FiniteOptions o;
    o.grid = grid;
    return without_empty_profiles(two_merchant_mechanism(d, solve_two_merchant(d, wv, wv), wv, o));
  };
  for (auto const &[name, d] : {std::pair{"partnership", TwoMerchantData{0.0, 0.0, 0.5, 0.5}},
                                std::pair{"bilateral", TwoMerchantData{0.0, 0.0, 0.0, 1.0}}})
  {
    auto const rep = verify_mechanism(build(d, 201));
    std::string worst;
    for (auto const &k : rep.checks)
    {
      worst += fmt(" %s=%.2g", k.name.c_str(), k.worst);
    }
    c.check(rep.passed(), std::string(name) + ": every check passes;" + worst);
  }

  auto o = build({0.0, 0.0, 0.5, 0.5}, 201).outcome();
  auto &m = o.merchants[0];
  for (std::size_t k = 0; k < m.theta.size(); ++k)
  {
    double const z = (m.theta[k] - 0.85) / 0.03;
    m.transfers[k] -= 0.02 * std::exp(-z * z);
  }
  auto const ic = check_ic(o);
  c.check(!ic.pass && !ic.witness.empty(),
          fmt("corrupted transfers fail ic: worst %.4f at %s", ic.worst, ic.witness.c_str()));

  auto const target = build(BundlingExample(0.8).data(), 21);
  auto const bf = brute_force_value(target, 21);
  c.check(target.dataset().profile_count() == 2 && bf.value - bf.target <= 2.0 * bf.grid_error,
          fmt("brute force (2 merchants, %zu profiles, 21-point grid, %zu candidates): best %.6f vs scoring %.6f, "
              "tolerance %.4f",
              target.dataset().profile_count(), bf.candidates, bf.value, bf.target, 2.0 * bf.grid_error));
}

// ---------------------------------------------------------------------------------------------

std::string slurp(fs::path const &p)
{
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int run_cli(std::string const &command, fs::path const &config, fs::path const &out, std::string const &extra = "")
{
  std::string const cmd = std::string("\"") + DATASHARE_CLI + "\" " + command + " --config \"" + config.string() +
                          "\" --out \"" + out.string() + "\" " + extra + " > /dev/null 2>&1";
  int const rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::string> csv_names(fs::path const &dir)
{
  std::vector<std::string> out;
  if (fs::exists(dir))
  {
    for (auto const &e : fs::directory_iterator(dir))
    {
      if (e.path().extension() == ".csv")
      {
        out.push_back(e.path().filename().string());
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void determinism(Criterion &c)
{
  fs::path const root = fs::temp_directory_path() / ("datashare_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(root);

  // Shipped configs, with the slow sections trimmed.
  struct Case
  {
    std::string name, command, body, extra;
  };
  std::vector<Case> cases;
  for (auto const &[file, command] : std::vector<std::pair<std::string, std::string>>{
         {"finite_partnership.json", "solve-finite"}, {"stylized.json", "solve-stylized"}})
  {
    cases.push_back({file, command, slurp(fs::path(DATASHARE_CONFIGS) / file), ""});
  }
  cases.push_back({"continuum (trimmed)", "solve-continuum", R"({
    "schema_version": 1, "seed": 11,
    "continuum": {
      "solve": {"weight": [0.7, 0.3],
                "laws": [[{"law": "uniform", "lo": 0.3, "hi": 1}, {"law": "beta", "a": 2, "b": 2}],
                         [{"law": "uniform", "lo": 0.3, "hi": 1}, {"law": "uniform", "lo": 0.3, "hi": 1}]],
                "mc_draws": 20000},
      "eps_sweep": {"eps": {"values": [0.2, 0.6]}, "lambda1": [0.5, 0.8]},
      "zN": {"merchants": [2, 10]}}})",
                   ""});
  cases.push_back({"large market (trimmed)", "large-market", R"({
    "schema_version": 1, "seed": 3,
    "large_market": {"mean_ctr": 0.4,
      "are_sweep": {"mean_ctr": {"from": 0, "to": 1, "steps": 11}, "revenue_weight": [0.01, 0.99]},
      "finite_limit": {"merchants": [10, 50], "grid": 41}}})",
                   ""});
  cases.push_back({"monte carlo, 3 merchants", "solve-finite", R"({
    "schema_version": 1, "seed": 99,
    "finite": {"profiles": [[1, 0.5, 0.2], [0.3, 1, 0.6]], "mass": [[0.3, 0.1, 0.1], [0.1, 0.2, 0.2]],
               "levels": [0.4, 0.3, 0.2], "grid": 21, "method": "monte_carlo", "mc_draws": 30000}})",
                   "--threads 1"});
  cases.push_back({"verify with sampling", "verify", R"({
    "schema_version": 1, "seed": 5,
    "verify": {"mechanism": "bundling", "shared": 0.8, "options": {"grid": 41}, "saddle": {"samples": 500}}})",
                   ""});

  std::size_t files = 0;
  for (std::size_t k = 0; k < cases.size(); ++k)
  {
    auto const &cs = cases[k];
    fs::path const cfg = root / ("config_" + std::to_string(k) + ".json");
    std::ofstream(cfg, std::ios::binary) << cs.body;
    fs::path const a = root / ("a_" + std::to_string(k));
    fs::path const b = root / ("b_" + std::to_string(k));
    int const ra = run_cli(cs.command, cfg, a, cs.extra);
    int const rb = run_cli(cs.command, cfg, b, cs.extra);
    auto const names = csv_names(a);
    bool same = ra == 0 && rb == 0 && !names.empty() && names == csv_names(b);
    for (auto const &n : names)
    {
      same = same && slurp(a / n) == slurp(b / n);
    }
    files += names.size();
    c.check(same, fmt("%s: %zu CSVs byte-identical across two runs (exit codes %d, %d)", cs.name.c_str(),
                      names.size(), ra, rb));
  }

  // Thread count does not change Monte Carlo output.
  std::size_t const mc = 4;
  fs::path const t4 = root / "threads_4";
  int const rt = run_cli(cases[mc].command, root / ("config_" + std::to_string(mc) + ".json"), t4, "--threads 4");
  bool same = rt == 0;
  for (auto const &n : csv_names(root / ("a_" + std::to_string(mc))))
  {
    same = same && slurp(t4 / n) == slurp(root / ("a_" + std::to_string(mc)) / n);
  }
  c.check(same, "monte carlo output identical with 1 and 4 threads");
  c.check(files > 0, fmt("%zu CSV files compared", files));

  std::error_code ec;
  fs::remove_all(root, ec);
}

}  // namespace

int main()
{
  std::vector<std::pair<Criterion, std::function<void(Criterion &)>>> suite{
    {{"classic benchmarks", 1.0}, classic},
    {{"bundling example", 30.0}, bundling},
    {{"two-merchant solutions round-trip through the finite engine", 300.0}, round_trip},
    {{"continuum levels (two merchants, uniform rates on [eps, 1])", 300.0}, continuum_levels},
    {{"levels grow with market size", 600.0}, market_size},
    {{"large-market design, profits and efficiency", 10.0}, large_market},
    {{"finite markets approach the large-market limit", 600.0}, limits},
    {{"verification suite", 600.0}, verification},
    {{"determinism", 600.0}, determinism},
  };

  int unexpected = 0;
  int known      = 0;
  int id         = 0;
  for (auto &[crit, run] : suite)
  {
    ++id;
    auto const t0 = std::chrono::steady_clock::now();
    try
    {
      run(crit);
    }
    catch (std::exception const &e)
    {
      crit.check(false, std::string("exception: ") + e.what());
    }
    crit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    crit.check(crit.seconds < crit.budget_s, fmt("runtime %.2f s (budget %.0f s)", crit.seconds, crit.budget_s));

    bool all = true, only_known = true;
    for (auto const &k : crit.checks)
    {
      all = all && k.pass;
      only_known = only_known && (k.pass || k.known);
    }
    char const *status = all ? "PASS" : only_known ? "FAIL (known gap)" : "FAIL";
    std::printf("[%s] criterion %d: %s (%.2f s)\n", status, id, crit.title.c_str(), crit.seconds);
    for (auto const &k : crit.checks)
    {
      std::printf("    %s %s%s\n", k.pass ? "ok  " : "FAIL", k.label.c_str(), !k.pass && k.known ? " [known gap]" : "");
    }
    std::fflush(stdout);
    unexpected += !only_known;
    known += !all && only_known;
  }
  std::printf("summary: %d criteria, %d unexpected failures, %d with known gaps\n", id, unexpected, known);
  return unexpected == 0 ? 0 : 1;
}
