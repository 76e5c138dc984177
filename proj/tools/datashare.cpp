//------------------------------------------------------------------------------
//
//   Copyright 2026 The datashare Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

// Experiment runner: reads a JSON config, runs one solver, writes CSV artifacts and a
// run manifest.

#include "config.hpp"
#include "output.hpp"

#include <datashare/continuum.hpp>
#include <datashare/finite.hpp>
#include <datashare/largemarket.hpp>
#include <datashare/stylized.hpp>
#include <datashare/verify.hpp>

#include <CLI11.hpp>
#include <boost/version.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef DATASHARE_VERSION
#define DATASHARE_VERSION "0.0.0"
#endif

namespace datashare::cli {
namespace {

enum ExitCode : int
{
  kOk          = 0,
  kViolation   = 1,
  kSchema      = 2,
  kConvergence = 3,
  kUnsupported = 4,
  kIo          = 5,
};

struct RunContext
{
  std::string   command;
  std::uint64_t seed    = 1;
  unsigned      threads = 1;
  OutputDir    *out     = nullptr;
};

// ---------------------------------------------------------------------------------------------
// Shared config pieces

struct Common
{
  TypeDistribution types = TypeDistribution::uniform();
  WelfareWeight    weights{0.0, 0.0, 1.0};

  WeightedVirtual virtuals() const
  {
    return {types, weights};
  }
};

Common read_common(Node &root)
{
  Common c;
  if (auto n = root.optional_object("types"))
  {
    c.types = read_types(std::move(*n));
  }
  if (auto n = root.optional_object("weights"))
  {
    c.weights = read_weights(std::move(*n));
  }
  return c;
}

FiniteOptions read_finite_options(Node &n, RunContext const &ctx)
{
  FiniteOptions o;
  o.grid = n.count("grid", 201);
  if (o.grid < 2)
  {
    throw SchemaError(n.child("grid") + ": need at least two grid points");
  }
  std::string const method = n.choice("method", {"exact", "gauss_legendre", "monte_carlo"}, "exact");
  o.method   = method == "exact"            ? OpponentIntegration::exact
               : method == "gauss_legendre" ? OpponentIntegration::gauss_legendre
                                            : OpponentIntegration::monte_carlo;
  o.mc_draws = n.count("mc_draws", 200000);
  o.seed     = ctx.seed;
  o.threads  = ctx.threads;
  return o;
}

/// "finite": {"profiles": [[...]], "mass": [[...]], "levels": [...], "ties": {...}, ...}
FiniteMechanism read_finite(Node n, Common const &common, RunContext const &ctx)
{
  FiniteDataset d;
  d.profiles = n.matrix("profiles");
  d.mass     = n.matrix("mass");
  d.merchants = d.profiles.empty() ? 0 : d.profiles.front().size();
  at_path(n.path(), [&] { d.validate(); return 0; });

  auto const levels = n.numbers("levels");
  if (levels.size() != d.merchants)
  {
    throw SchemaError(n.child("levels") + ": need one level per merchant");
  }
  std::vector<ScoringRule> rules;
  for (std::size_t i = 0; i < levels.size(); ++i)
  {
    std::string const where = n.child("levels") + "[" + std::to_string(i) + "]";
    rules.push_back(at_path(where, [&] { return ScoringRule(common.virtuals(), levels[i]); }));
  }

  TieBreakRule ties = TieBreakRule::even(d.profile_count(), d.merchants);
  if (auto t = n.optional_object("ties"))
  {
    if (t->has("positive"))
    {
      ties.positive = t->matrix("positive");
    }
    if (t->has("zero"))
    {
      ties.zero = t->matrix("zero");
    }
    t->finish();
    at_path(t->path(), [&] { ties.validate(d.profile_count(), d.merchants); return 0; });
  }
  auto const opts = read_finite_options(n, ctx);
  n.finish();
  return {std::move(d), std::move(rules), std::move(ties), opts};
}

// ---------------------------------------------------------------------------------------------
// solve-finite

void write_scoring_rules(OutputDir &out, std::vector<ScoringRule> const &rules, std::size_t grid)
{
  Table t({"merchant", "level", "theta", "virtual_value", "virtual_cost", "score"});
  auto const pts = numerics::linspace(0.0, 1.0, grid);
  for (std::size_t i = 0; i < rules.size(); ++i)
  {
    auto const &r = rules[i];
    for (double th : pts)
    {
      t.add({static_cast<std::int64_t>(i), r.level(), th, r.virtuals()(th, Side::buying),
             r.virtuals()(th, Side::selling), r.score(th)});
    }
  }
  out.write("scoring_rule.csv", t);
}

int run_solve_finite(Node &root, RunContext const &ctx)
{
  Common const common = read_common(root);
  auto const mech     = read_finite(root.object("finite"), common, ctx);
  root.finish();

  auto const o = mech.outcome();
  Table interim({"merchant", "theta", "clicks", "click_se", "transfer", "utility"});
  Table merchants({"merchant", "level", "band_lo", "band_hi", "critical_type", "outside_option", "worst_off",
                   "worst_off_lo", "worst_off_hi", "attained"});
  std::vector<double> ref;
  for (std::size_t i = 0; i < o.merchants.size(); ++i)
  {
    auto const &m = o.merchants[i];
    auto const &r = mech.rules()[i];
    for (std::size_t k = 0; k < m.theta.size(); ++k)
    {
      double const se = m.click_se.empty() ? 0.0 : m.click_se[k];
      interim.add({static_cast<std::int64_t>(i), m.theta[k], m.clicks[k], se, m.transfers[k], m.utility[k]});
    }
    auto const band = r.tie_interval();
    merchants.add({static_cast<std::int64_t>(i), r.level(), band.first, band.second, r.critical_type(),
                   m.outside_option, m.worst_off, m.worst_off_lo, m.worst_off_hi,
                   static_cast<std::int64_t>(m.attained)});
    ref.push_back(m.worst_off);
  }
  auto const obj = objective(o);
  Table objective_table({"value", "clicks", "revenue", "weighted", "virtual_objective"});
  objective_table.add({obj.value, obj.clicks, obj.revenue, obj.weighted, virtual_objective(o, ref)});

  ctx.out->write("interim.csv", interim);
  ctx.out->write("merchants.csv", merchants);
  ctx.out->write("objective.csv", objective_table);
  write_scoring_rules(*ctx.out, mech.rules(), mech.options().grid);
  return kOk;
}

// ---------------------------------------------------------------------------------------------
// solve-stylized

int run_solve_stylized(Node &root, RunContext const &ctx)
{
  Common const common = read_common(root);
  Node st             = root.object("stylized");
  root.finish();
  auto const wv = common.virtuals();

  if (st.flag("benchmarks", true))
  {
    auto const b = classic_benchmarks(wv);
    Table t({"quantity", "value"});
    t.add({std::string("monopoly_price"), b.monopoly_price});
    t.add({std::string("bilateral_level_1"), b.bilateral_level[0]});
    t.add({std::string("bilateral_level_2"), b.bilateral_level[1]});
    // Seller types below the seller's band trade with buyer types whose score matches; record
    // the range of the type gap along that boundary.
    ScoringRule const buyer(wv, b.bilateral_level[0]);
    ScoringRule const seller(wv, b.bilateral_level[1]);
    double gap_lo = std::numeric_limits<double>::infinity();
    double gap_hi = -gap_lo;
    for (double t2 : numerics::linspace(0.0, seller.tie_interval().first, 51))
    {
      double const y = seller.score(t2);
      if (y <= buyer.level() || y > buyer.score(1.0) || t2 >= seller.tie_interval().first)
      {
        continue;
      }
      double const gap = buyer.type_for_score(y) - t2;
      gap_lo = std::min(gap_lo, gap);
      gap_hi = std::max(gap_hi, gap);
    }
    t.add({std::string("bilateral_trade_gap_min"), gap_lo});
    t.add({std::string("bilateral_trade_gap_max"), gap_hi});
    t.add({std::string("partnership_level"), b.partnership_level});
    t.add({std::string("partnership_band_lo"), b.partnership_band[0]});
    t.add({std::string("partnership_band_hi"), b.partnership_band[1]});
    t.add({std::string("partnership_tie_1"), b.partnership_tie});
    ctx.out->write("benchmarks.csv", t);
  }

  if (auto bn = st.optional_object("bundling"))
  {
    auto const shares = read_axis(bn->object("shared"));
    auto const draws  = bn->count("mc_draws", 0);
    bn->finish();
    Table t({"alpha11", "nu", "zB", "thetaS", "thetaB", "p1", "revenue_separate", "revenue_bundled",
             "revenue_gain", "gain_mc", "gain_mc_se"});
    for (std::size_t k = 0; k < shares.size(); ++k)
    {
      std::string const where = bn->child("shared") + "[" + std::to_string(k) + "]";
      BundlingExample const ex = at_path(where, [&] { return BundlingExample(shares[k]); });
      double mc = 0.0, se = 0.0;
      if (draws > 0)
      {
        std::tie(mc, se) = ex.simulated_gain(draws, rng::stream_seed(ctx.seed, k));
      }
      t.add({ex.shared, ex.ratio, ex.level, ex.band_lo, ex.band_hi, ex.tie_share1, ex.separate_revenue(),
             ex.bundled_revenue(), ex.bundled_revenue() - ex.separate_revenue(), mc, se});
    }
    ctx.out->write("bundling.csv", t);
  }

  if (auto sw = st.optional_object("sweep"))
  {
    double const r = sw->number("shared_split", 0.5);
    auto const b1  = read_axis(sw->object("beta1"));
    auto const b2  = read_axis(sw->object("beta2"));
    sw->finish();
    Table t({"a1_01", "a2_10", "a1_11", "a2_11", "beta1", "beta2", "case", "branch", "z1", "z2", "p1", "p2",
             "z2_lo", "z2_hi", "attains1", "attains2"});
    for (double x : b1)
    {
      for (double y : b2)
      {
        if (x > r || y > 1.0 - r)
        {
          continue;  // not representable with this split of shared customers
        }
        auto const d   = at_path(sw->path(), [&] { return TwoMerchantData::from_excess(x, y, r); });
        auto const sol = solve_two_merchant(d, wv, wv);
        t.add({d.excl2_held_by1, d.excl1_held_by2, d.shared_held_by1, d.shared_held_by2, sol.excess[0],
               sol.excess[1], std::string(to_string(sol.which)), sol.branch, sol.level[0], sol.level[1],
               sol.shared_tie[0], sol.shared_tie[1], sol.level2_lo, sol.level2_hi,
               static_cast<std::int64_t>(sol.attains[0]), static_cast<std::int64_t>(sol.attains[1])});
      }
    }
    ctx.out->write("stylized_sweep.csv", t);
  }
  st.finish();
  return kOk;
}

// ---------------------------------------------------------------------------------------------
// solve-continuum

OptZOptions read_optz(Node &n)
{
  OptZOptions o;
  o.tol      = n.number("tol", o.tol);
  o.damping  = n.number("damping", o.damping);
  o.max_iter = static_cast<int>(n.count("max_iter", static_cast<std::uint64_t>(o.max_iter)));
  if (!(o.tol > 0.0))
  {
    throw SchemaError(n.child("tol") + ": must be positive");
  }
  if (!(o.damping > 0.0 && o.damping <= 1.0))
  {
    throw SchemaError(n.child("damping") + ": must lie in (0, 1]");
  }
  return o;
}

int run_solve_continuum(Node &root, RunContext const &ctx)
{
  Common const common = read_common(root);
  Node cn             = root.object("continuum");
  root.finish();
  auto const wv   = common.virtuals();
  auto const opts = read_optz(cn);

  if (auto sv = cn.optional_object("solve"))
  {
    ContinuumDataset d;
    d.weight = sv->numbers("weight");
    auto const &laws = sv->raw("laws");
    std::string const lp = sv->child("laws");
    if (!laws.is_array())
    {
      throw SchemaError(lp + ": expected an array of arrays of laws");
    }
    for (std::size_t k = 0; k < laws.size(); ++k)
    {
      std::string const row = lp + "[" + std::to_string(k) + "]";
      if (!laws[k].is_array())
      {
        throw SchemaError(row + ": expected an array of laws");
      }
      d.laws.emplace_back();
      for (std::size_t c = 0; c < laws[k].size(); ++c)
      {
        d.laws.back().push_back(read_law(Node(laws[k][c], row + "[" + std::to_string(c) + "]")));
      }
    }
    auto const draws = sv->count("mc_draws", 0);
    sv->finish();
    at_path(sv->path(), [&] { d.validate(); return 0; });

    ContinuumModel const m(d, std::vector<WeightedVirtual>(d.merchants(), wv));
    auto const r = solve_optz(m, opts);
    Table t({"merchant", "weight", "outside_option", "level", "residual", "corner", "critical_type", "clicks",
             "sim_clicks", "sim_se"});
    for (std::size_t i = 0; i < d.merchants(); ++i)
    {
      ScoringRule const rule(wv, r.level[i]);
      double const th = rule.critical_type();
      double sim = 0.0, se = 0.0;
      if (draws > 0)
      {
        std::tie(sim, se) = m.simulate_clicks(i, th, r.level, draws, rng::stream_seed(ctx.seed, i));
      }
      t.add({static_cast<std::int64_t>(i), d.weight[i], d.outside_option(i), r.level[i], r.residual[i],
             static_cast<std::int64_t>(r.corner[i]), th, m.clicks(i, rule.score(th), m.rules(r.level)), sim, se});
    }
    ctx.out->write("optz.csv", t);
  }

  if (auto es = cn.optional_object("eps_sweep"))
  {
    auto const eps     = read_axis(es->object("eps"));
    auto const lambdas = es->numbers("lambda1");
    es->finish();
    Table t({"eps", "lambda1", "z1", "z2", "residual_max", "iterations"});
    for (double l1 : lambdas)
    {
      if (!(l1 > 0.0 && l1 < 1.0))
      {
        throw SchemaError(es->child("lambda1") + ": values must lie in (0, 1)");
      }
      for (double e : eps)
      {
        if (!(e >= 0.0 && e < 1.0))
        {
          throw SchemaError(es->child("eps") + ": values must lie in [0, 1)");
        }
        Law const law = Law::uniform(e, 1.0);
        ContinuumModel const m({{l1, 1.0 - l1}, {{law, law}, {law, law}}}, {wv, wv});
        auto const r = solve_optz(m, opts);
        double const worst = std::max(std::abs(r.residual[0]), std::abs(r.residual[1]));
        t.add({e, l1, r.level[0], r.level[1], worst, static_cast<std::int64_t>(r.iterations)});
      }
    }
    ctx.out->write("continuum_eps_sweep.csv", t);
  }

  if (auto zn = cn.optional_object("zN"))
  {
    auto const sizes = zn->counts("merchants");
    Law law          = Law::uniform(0.0, 1.0);
    if (auto l = zn->optional_object("ctr"))
    {
      law = read_law(std::move(*l));
    }
    zn->finish();
    Table t({"N", "z", "residual"});
    for (auto N : sizes)
    {
      if (N < 2)
      {
        throw SchemaError(zn->child("merchants") + ": need at least two merchants");
      }
      SymmetricModel const s(wv, law, N);
      double const z = s.solve(opts.tol);
      t.add({static_cast<std::int64_t>(N), z, s.residual(z)});
    }
    ctx.out->write("zN.csv", t);
  }
  cn.finish();
  return kOk;
}

// ---------------------------------------------------------------------------------------------
// large-market

int run_large_market(Node &root, RunContext const &ctx)
{
  Common const common = read_common(root);
  Node lm             = root.object("large_market");
  root.finish();

  LargeMarketConfig base;
  base.dist     = common.types;
  base.eta      = common.weights;
  base.mean_ctr = lm.number("mean_ctr", 0.5);
  if (auto s = lm.optional_object("surplus"))
  {
    base.surplus_clicks = s->number("clicks", 0.0);
    base.surplus_value  = s->number("value", 1.0);
    s->finish();
  }
  at_path(lm.path(), [&] { base.validate(); return 0; });

  {
    auto const d = design(base);
    auto const e = efficiency(base);
    Table t({"mean_ctr", "revenue_weight", "p_S", "p_B", "p_tilde", "p_tilde_saturated", "p_tilde_defined",
             "profit_selling", "profit_exchange", "profit_combined", "profit_bid_ask", "design_value",
             "total_surplus", "ARE"});
    double const bid_ask = d.bid_ask_defined ? selling_profit(base, d.bid_ask_price)
                                             : std::numeric_limits<double>::quiet_NaN();
    t.add({base.mean_ctr, base.eta.revenue, d.sell_price, d.buy_price, d.bid_ask_price,
           static_cast<std::int64_t>(d.bid_ask_saturated), static_cast<std::int64_t>(d.bid_ask_defined),
           selling_profit(base, d.sell_price), exchange_profit(base, d.sell_price), combined_profit(base, d.sell_price),
           bid_ask, e.design_value, e.total_surplus, e.ratio});
    ctx.out->write("design.csv", t);
  }

  if (auto sw = lm.optional_object("are_sweep"))
  {
    auto const mus = read_axis(sw->object("mean_ctr"));
    auto const rs  = sw->numbers("revenue_weight");
    sw->finish();
    Table t({"mean_ctr", "eta_r", "ARE", "profit", "total_surplus", "p_S", "p_tilde", "gain_over_bid_ask"});
    for (double r : rs)
    {
      for (double mu : mus)
      {
        LargeMarketConfig cfg = base;
        cfg.mean_ctr = mu;
        cfg.eta = at_path(sw->child("revenue_weight"), [&] { return WelfareWeight(1.0 - r, 0.0, r); });
        at_path(sw->path(), [&] { cfg.validate(); return 0; });
        auto const d = design(cfg);
        auto const e = efficiency(cfg);
        double const gain = d.bid_ask_defined
                              ? combined_profit(cfg, d.sell_price) - selling_profit(cfg, d.bid_ask_price)
                              : std::numeric_limits<double>::quiet_NaN();
        t.add({mu, r, e.ratio, e.revenue, e.total_surplus, d.sell_price, d.bid_ask_price, gain});
      }
    }
    ctx.out->write("are_sweep.csv", t);
  }

  if (auto fl = lm.optional_object("finite_limit"))
  {
    auto const sizes = fl->counts("merchants");
    Law ctr          = Law::uniform(0.0, 1.0);
    if (auto l = fl->optional_object("ctr"))
    {
      ctr = read_law(std::move(*l));
    }
    std::size_t const grid = fl->count("grid", 101);
    fl->finish();
    if (grid < 2)
    {
      throw SchemaError(fl->child("grid") + ": need at least two grid points");
    }
    for (auto N : sizes)
    {
      if (N < 2)
      {
        throw SchemaError(fl->child("merchants") + ": need at least two merchants");
      }
    }
    WeightedVirtual const wv = common.virtuals();
    auto const pts = finite_limit(wv, ctr, std::vector<std::size_t>(sizes.begin(), sizes.end()), grid);
    double const mu = ctr.mean();
    double const ps = wv.inverse_clamped(1.0, Side::selling);
    Table clicks({"N", "theta", "scaled_clicks", "limit"});
    Table summary({"N", "level", "band_lo", "band_hi", "step_error", "step_error_outside", "selling_transfer",
                   "selling_target", "menu_gap"});
    for (auto const &p : pts)
    {
      auto const n = static_cast<std::int64_t>(p.merchants);
      for (std::size_t k = 0; k < p.theta.size(); ++k)
      {
        clicks.add({n, p.theta[k], p.scaled_clicks[k], p.theta[k] >= ps ? mu : 0.0});
      }
      summary.add({n, p.level, p.band_lo, p.band_hi, p.step_error, p.step_error_outside, p.selling_transfer,
                   p.selling_target, p.menu_gap});
    }
    ctx.out->write("clicks_limit.csv", clicks);
    ctx.out->write("finite_limit.csv", summary);
  }
  lm.finish();
  return kOk;
}

// ---------------------------------------------------------------------------------------------
// verify

FiniteMechanism named_mechanism(Node &v, Common const &common, RunContext const &ctx)
{
  std::string const name =
    v.choice("mechanism", {"partnership", "bilateral", "bundling", "two_merchant", "finite"}, "partnership");
  if (name == "finite")
  {
    return read_finite(v.object("finite"), common, ctx);
  }
  TwoMerchantData d;
  if (name == "partnership")
  {
    double const r = v.number("share", 0.5);
    d = {0.0, 0.0, r, 1.0 - r};
    at_path(v.child("share"), [&] { d.validate(); return 0; });
  }
  else if (name == "bilateral")
  {
    d = {0.0, 0.0, 0.0, 1.0};
  }
  else if (name == "bundling")
  {
    double const s = v.number("shared", 0.8);
    d = at_path(v.child("shared"), [&] { return BundlingExample(s).data(); });
  }
  else
  {
    Node m = v.object("masses");
    d.excl2_held_by1  = m.number("a1_01");
    d.excl1_held_by2  = m.number("a2_10");
    d.shared_held_by1 = m.number("a1_11");
    d.shared_held_by2 = m.number("a2_11");
    m.finish();
    at_path(m.path(), [&] { d.validate(); return 0; });
  }
  Node opts_node = v.optional_object("options").value_or(Node(json::object(), v.child("options")));
  auto const opts = read_finite_options(opts_node, ctx);
  opts_node.finish();
  auto const wv  = common.virtuals();
  auto const sol = solve_two_merchant(d, wv, wv);
  return without_empty_profiles(two_merchant_mechanism(d, sol, wv, opts));
}

int run_verify(Node &root, RunContext const &ctx)
{
  Common const common = read_common(root);
  Node v              = root.object("verify");
  root.finish();
  auto const mech = named_mechanism(v, common, ctx);
  double const eps = v.number("eps", 1e-4);
  SaddleOptions saddle;
  saddle.seed = ctx.seed;
  if (auto s = v.optional_object("saddle"))
  {
    saddle.samples         = s->count("samples", saddle.samples);
    saddle.scan            = s->count("scan", saddle.scan);
    saddle.tol             = s->number("tol", saddle.tol);
    saddle.identity_points = s->count("identity_points", saddle.identity_points);
    s->finish();
  }
  std::optional<std::size_t> brute_grid;
  if (auto b = v.optional_object("brute_force"))
  {
    brute_grid = b->count("grid", 21);
    b->finish();
  }
  v.finish();

  auto rep = verify_mechanism(mech, eps, saddle);
  if (brute_grid)
  {
    auto const b = brute_force_value(mech, *brute_grid);
    CheckResult c;
    c.name      = "brute_force";
    c.worst     = b.value - b.target;
    c.tolerance = 2.0 * b.grid_error;
    c.pass      = c.worst <= c.tolerance;
    std::ostringstream w;
    w.precision(12);
    w << "levels=" << b.best_levels.at(0) << "/" << b.best_levels.at(1) << " ties=" << b.best_ties
      << " candidates=" << b.candidates;
    c.witness = w.str();
    rep.checks.push_back(c);
  }

  Table t({"check", "pass", "worst", "tolerance", "witness"});
  for (auto const &c : rep.checks)
  {
    t.add({c.name, static_cast<std::int64_t>(c.pass), c.worst, c.tolerance, c.witness});
  }
  ctx.out->write("verify.csv", t);
  ctx.out->write("verify_report.txt", rep.to_text());
  std::cout << rep.to_text();
  return rep.exit_code();
}

// ---------------------------------------------------------------------------------------------

using Runner = int (*)(Node &, RunContext const &);

struct Command
{
  char const *name;
  char const *help;
  Runner      run;
};

constexpr Command kCommands[] = {
  {"solve-finite", "interim curves, payoffs and objective of a scoring mechanism", run_solve_finite},
  {"solve-stylized", "two-merchant closed forms, bundling example and benchmarks", run_solve_stylized},
  {"solve-continuum", "ironing levels for continuous click-through rates", run_solve_continuum},
  {"large-market", "three-market design, efficiency and finite-market limits", run_large_market},
  {"verify", "incentive, participation and optimality checks on one mechanism", run_verify},
};

json load_config(std::string const &path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f)
  {
    throw SchemaError(path + ": cannot read config");
  }
  try
  {
    return json::parse(f);
  }
  catch (json::parse_error const &e)
  {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
}

json manifest(RunContext const &ctx, std::string const &config_text, std::vector<std::string> const &files)
{
  json m;
  m["tool"]           = "datashare";
  m["version"]        = DATASHARE_VERSION;
  m["command"]        = ctx.command;
  m["schema_version"] = kSchemaVersion;
  m["config_hash"]    = "fnv1a64:" + hex64(fnv1a(config_text));
  m["seed"]           = ctx.seed;
  m["threads"]        = ctx.threads;
  m["outputs"]        = files;
  m["libraries"]      = {{"boost", BOOST_LIB_VERSION},
                         {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  return m;
}

struct Invocation
{
  std::string                  config;
  std::optional<std::string>   out;
  std::optional<std::uint64_t> seed;
  unsigned                     threads = 1;
};

int execute(Command const &cmd, Invocation const &inv)
{
  json const cfg = load_config(inv.config);
  Node root(cfg, "$");
  auto const version = root.count("schema_version");
  if (version != kSchemaVersion)
  {
    throw SchemaError("$.schema_version: unsupported version " + std::to_string(version));
  }
  if (root.has("command") && root.text("command") != cmd.name)
  {
    throw SchemaError("$.command: config is for '" + root.text("command") + "', not '" + cmd.name + "'");
  }

  RunContext ctx;
  ctx.command = cmd.name;
  std::uint64_t const config_seed = root.count("seed", 1);
  ctx.seed    = inv.seed ? *inv.seed : config_seed;
  ctx.threads = inv.threads;

  std::string dir = root.text("output_dir", "out");
  if (char const *env = std::getenv("DATASHARE_OUT_DIR"); env && *env)
  {
    dir = env;
  }
  if (inv.out)
  {
    dir = *inv.out;
  }
  OutputDir out(dir);
  ctx.out = &out;

  int const rc = cmd.run(root, ctx);

  // The hash covers the canonical config plus the effective seed.
  json hashed = cfg;
  hashed["seed"] = ctx.seed;
  out.write("manifest.json", manifest(ctx, hashed.dump(), out.files()).dump(2) + "\n");
  return rc;
}

}  // namespace
}  // namespace datashare::cli

int main(int argc, char **argv)
{
  using namespace datashare;
  using namespace datashare::cli;

  CLI::App app{"Optimal data-sharing mechanisms: solvers, sweeps and verification"};
  app.set_version_flag("--version", std::string(DATASHARE_VERSION));
  app.require_subcommand(1);

  Invocation inv;
  Command const *chosen = nullptr;
  for (auto const &cmd : kCommands)
  {
    auto *sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", inv.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", inv.out, "output directory (overrides DATASHARE_OUT_DIR and the config)");
    sub->add_option("--seed", inv.seed, "master seed (overrides the config)");
    sub->add_option("--threads", inv.threads, "worker threads for Monte Carlo integration")
      ->check(CLI::Range(1U, 256U));
    sub->callback([&chosen, &cmd] { chosen = &cmd; });
  }

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::Success const &e)
  {
    return app.exit(e);
  }
  catch (CLI::ParseError const &e)
  {
    app.exit(e);
    return kSchema;
  }

  try
  {
    return execute(*chosen, inv);
  }
  catch (SchemaError const &e)
  {
    std::cerr << "config error: " << e.what() << "\n";
    return kSchema;
  }
  catch (ConvergenceError const &e)
  {
    std::cerr << "solver did not converge: " << e.what() << "\n";
    return kConvergence;
  }
  catch (UnsupportedError const &e)
  {
    std::cerr << "unsupported configuration: " << e.what() << "\n";
    return kUnsupported;
  }
  catch (OutputError const &e)
  {
    std::cerr << "output error: " << e.what() << "\n";
    return kIo;
  }
  catch (std::invalid_argument const &e)
  {
    std::cerr << "config error: " << e.what() << "\n";
    return kSchema;
  }
  catch (std::domain_error const &e)
  {
    std::cerr << "config error: " << e.what() << "\n";
    return kSchema;
  }
}
