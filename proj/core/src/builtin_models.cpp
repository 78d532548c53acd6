#include <algorithm>

#include "pgsolve/modelio.hpp"

namespace pg::modelio {

namespace {

using expr::PolyExpr;
using expr::ProbVar;

PolyExpr var(int player, const char* action) { return PolyExpr::variable(ProbVar{player, action}); }
Rational q(long n, long d = 1) { return ratio(n, d); }

const char* kConfidence = R"(nfpg

// Player 1's proposal goes to player 2 or 3 with equal probability.
player p1;
player p2: a2, r2;
player p3: a3, r3;

rewards "p1"
  [a2,a3] true : 1 + a2 + a3;
  [a2,r3] true : 1/2 - 3/2*(a2 + a3);
  [r2,a3] true : 1/2 - 3/2*(a2 + a3);
  [r2,r3] true : -4*(a2 + a3);
endrewards

rewards "p2"
  [a2] true : 3/2*(a2 + a3);
  [r2] true : 1/2;
endrewards

rewards "p3"
  [r3] true : 1/2;
endrewards
)";

const char* kExample2 = R"(nfpg

player p1;
player p2: a2, b2;

rewards "p1"
  [a2] true : -400/81*a2 + 40/9;
endrewards
)";

const char* kReciprocity = R"(nfpg

const theta1;
const theta2;

player p1: fair, greedy;
player p2: accept, reject;

rewards "p1"
  [fair,reject] true : 5 + theta1*(-4)*(2 - 4*reject);
  [fair,accept] true : 5 + theta1*4*(2 - 4*reject);
  [greedy,reject] true : 1 + theta1*(-4)*(4*reject - 2);
  [greedy,accept] true : 9 + theta1*4*(4*reject - 2);
endrewards

rewards "p2"
  [fair,reject] true : 5 + theta2*(-4)*(2 - 4*reject);
  [fair,accept] true : 5 + theta2*4*(2 - 4*reject);
  [greedy,reject] true : 9 + theta2*(-4)*(4*reject - 2);
  [greedy,accept] true : 1 + theta2*4*(4*reject - 2);
endrewards
)";

const char* kUltimatum = R"(nfpg

const theta1;
const theta2;

player p1: fair, greedy;
player p2: accept, reject;

rewards "p1"
  [fair,reject] true : 5 + theta1*(-9/2)*(2 + reject/2);
  [fair,accept] true : 5 + theta1*(9/2)*(2 + reject/2);
  [greedy,reject] true : 0 + theta1*(-9/2)*(-2 - reject/2);
  [greedy,accept] true : 9 + theta1*(9/2)*(-2 - reject/2);
endrewards

rewards "p2"
  [fair,reject] true : 5 + theta2*(-9/2)*(2 + reject/2);
  [fair,accept] true : 5 + theta2*(9/2)*(2 + reject/2);
  [greedy,reject] true : 0 + theta2*(-9/2)*(-2 - reject/2);
  [greedy,accept] true : 1 + theta2*(9/2)*(-2 - reject/2);
endrewards
)";

const char* kCrossing = R"(nfpg

const mu;

player vehicle: r, m;
player pedestrian: w, c;

rewards "vehicle"
  [r,w] true : 1 - w;
  [r,c] true : 1 + c;
  [m,w] true : 1 + w;
  [m,c] true : 1 - c;
endrewards

rewards "pedestrian"
  [r,w] true : 1 - r;
  [r,c] true : 1 + r - mu*c;
  [m,w] true : 1 + m;
  [m,c] true : 1 - m - mu*c;
endrewards
)";

const char* kCyclist = R"(nfpg

// Nature picks an autonomous (a) or human-driven (h) vehicle and is indifferent.
player nature: a, h;
player cyclist: y, w, c;
player vehicle: g, s;

rewards "cyclist"
  [a,y,g] true : 5*a;
  [a,y,s] true : 3*a;
  [a,w,g] true : -400*a;
  [a,w,s] true : 15*a;
  [a,c,g] true : -500*a;
  [a,c,s] true : 20*a;
  [h,y,g] true : 8*h;
  [h,y,s] true : 6*h;
  [h,w,g] true : -400*h;
  [h,w,s] true : 15*h;
  [h,c,g] true : -500*h;
  [h,c,s] true : 20*h;
endrewards

rewards "vehicle"
  [a,y,g] true : 7;
  [a,y,s] true : 10;
  [a,w,g] true : -500;
  [a,w,s] true : 15;
  [a,c,g] true : -300;
  [a,c,s] true : 15;
  [h,y,g] true : 15;
  [h,y,s] true : 1;
  [h,w,g] true : -400;
  [h,w,s] true : 7;
  [h,c,g] true : -200;
  [h,c,s] true : 7;
endrewards
)";

const char* kCyclistBayes = R"(nfpg

// p is the share of autonomous vehicles.
const p;

player cyclist: y, w, c;
player vehicle: g, s;

rewards "cyclist"
  [y,g] true : -3*p + 8;
  [y,s] true : -3*p + 6;
  [w,g] true : -400;
  [w,s] true : 15;
  [c,g] true : -500;
  [c,s] true : 20;
endrewards

rewards "vehicle"
  [y,g] true : -8*p + 15;
  [y,s] true : 9*p + 1;
  [w,g] true : -100*p - 400;
  [w,s] true : 14*p + 7;
  [c,g] true : -100*p - 200;
  [c,s] true : 8*p + 7;
endrewards
)";

const char* kCrossingMulti = R"(pcsg

const mu;
const gamma;
const k;

player vehicle: r, m;
player pedestrian: w, c;

// j counts rounds; cr and cw remember the vehicle's and pedestrian's past moves.
j : [0..k] init 0;
cr : [0..10] init 0;
cw : [0..10] init 0;

[r,w] j < k -> gamma*gamma : (j'=j+1)&(cr'=min(cr+1,10))&(cw'=min(cw+1,10))
    + gamma*(1-gamma) : (j'=j+1)&(cr'=min(cr+1,10))&(cw'=cw)
    + (1-gamma)*gamma : (j'=j+1)&(cr'=cr)&(cw'=min(cw+1,10))
    + (1-gamma)*(1-gamma) : (j'=j+1)&(cr'=cr)&(cw'=cw);
[r,c] j < k -> gamma*gamma : (j'=j+1)&(cr'=min(cr+1,10))&(cw'=max(cw-1,0))
    + gamma*(1-gamma) : (j'=j+1)&(cr'=min(cr+1,10))&(cw'=0)
    + (1-gamma)*gamma : (j'=j+1)&(cr'=cr)&(cw'=max(cw-1,0))
    + (1-gamma)*(1-gamma) : (j'=j+1)&(cr'=cr)&(cw'=0);
[m,w] j < k -> gamma*gamma : (j'=j+1)&(cr'=max(cr-1,0))&(cw'=min(cw+1,10))
    + gamma*(1-gamma) : (j'=j+1)&(cr'=max(cr-1,0))&(cw'=cw)
    + (1-gamma)*gamma : (j'=j+1)&(cr'=0)&(cw'=min(cw+1,10))
    + (1-gamma)*(1-gamma) : (j'=j+1)&(cr'=0)&(cw'=cw);
[m,c] j < k -> gamma*gamma : (j'=j+1)&(cr'=max(cr-1,0))&(cw'=max(cw-1,0))
    + gamma*(1-gamma) : (j'=j+1)&(cr'=max(cr-1,0))&(cw'=0)
    + (1-gamma)*gamma : (j'=j+1)&(cr'=0)&(cw'=max(cw-1,0))
    + (1-gamma)*(1-gamma) : (j'=j+1)&(cr'=0)&(cw'=0);

rewards "vehicle"
  [r,w] true : 1 - 1/2*(w + cw/10);
  [r,c] true : 3/2 + 1/2*(c - cw/10);
  [m,w] true : 1 + 1/2*(w + cw/10);
  [m,c] true : 1/2 - 1/2*(c - cw/10);
endrewards

rewards "pedestrian"
  [r,w] true : 1 - 1/2*(r + cr/10);
  [r,c] true : 1 + 1/2*(r + cr/10) - mu*c;
  [m,w] true : 3/2 + 1/2*(m - cr/10);
  [m,c] true : 1/2 - 1/2*(m - cr/10) - mu*c;
endrewards
)";

// Utility tables in joint order from per-player rows (last player fastest).
game::Nfpg make(std::vector<std::string> players, std::vector<std::vector<std::string>> actions,
                std::vector<std::vector<PolyExpr>> util) {
  return game::Nfpg(std::move(players), std::move(actions), std::move(util));
}

class CrossingMulti : public pcsg::Dynamics {
 public:
  CrossingMulti(Rational mu, Rational gamma, int k) : mu_(std::move(mu)), gamma_(std::move(gamma)), k_(k) {}

  std::vector<std::string> players() const override { return {"vehicle", "pedestrian"}; }
  std::vector<std::string> variables() const override { return {"j", "cr", "cw"}; }
  pcsg::State initial() const override { return {0, 0, 0}; }

  pcsg::StateInfo expand(const pcsg::State& s) const override {
    pcsg::StateInfo info;
    const int j = s[0], cr = s[1], cw = s[2];
    if (j >= k_) {
      info.actions = {{game::kIdleAction}, {game::kIdleAction}};
      info.transitions = {{{s, Rational(1)}}};
      return info;
    }
    info.actions = {{"r", "m"}, {"w", "c"}};
    const Rational g = gamma_, ng = 1 - gamma_;
    // Counter after a move: attended, and not attended.
    auto reduce = [](bool up, int x) { return up ? std::pair{std::min(x + 1, 10), x} : std::pair{std::max(x - 1, 0), 0}; };
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        auto [cr1, cr0] = reduce(a == 0, cr);
        auto [cw1, cw0] = reduce(b == 0, cw);
        info.transitions.push_back({{{j + 1, cr1, cw1}, g * g},
                                    {{j + 1, cr1, cw0}, g * ng},
                                    {{j + 1, cr0, cw1}, ng * g},
                                    {{j + 1, cr0, cw0}, ng * ng}});
      }
    const PolyExpr r = var(0, "r"), m = var(0, "m"), w = var(1, "w"), c = var(1, "c");
    const Rational half = q(1, 2), hcw = q(cw, 10), hcr = q(cr, 10);
    info.action_rewards = {
        {1 - half * (w + hcw), q(3, 2) + half * (c - hcw), 1 + half * (w + hcw), half - half * (c - hcw)},
        {1 - half * (r + hcr), 1 + half * (r + hcr) - mu_ * c, q(3, 2) + half * (m - hcr),
         half - half * (m - hcr) - mu_ * c}};
    return info;
  }

 private:
  Rational mu_, gamma_;
  int k_;
};

Rational get(const Bindings& b, const char* name) {
  auto it = b.find(name);
  if (it == b.end()) throw ModelError(ErrorKind::UnboundConstant, std::string("no value for constant '") + name + "'");
  return it->second;
}

int get_int(const Bindings& b, const char* name) {
  Rational v = get(b, name);
  if (v.get_den() != 1 || v < 0 || v > 1000000)
    throw ModelError(ErrorKind::RangeError, std::string("'") + name + "' must be a nonnegative integer");
  return static_cast<int>(v.get_num().get_si());
}

ParamSpec param(const char* name, Rational lo, Rational hi, Rational def, bool integer = false) {
  return ParamSpec{name, std::move(lo), std::move(hi), std::move(def), integer};
}

}  // namespace

game::Nfpg confidence_game() {
  const PolyExpr a2 = var(1, "a2"), a3 = var(2, "a3");
  const PolyExpr mixed = q(1, 2) - q(3, 2) * (a2 + a3);
  // Joint order: (a2,a3), (a2,r3), (r2,a3), (r2,r3).
  return make({"p1", "p2", "p3"}, {{}, {"a2", "r2"}, {"a3", "r3"}},
              {{1 + a2 + a3, mixed, mixed, -4 * (a2 + a3)},
               {q(3, 2) * (a2 + a3), q(3, 2) * (a2 + a3), q(1, 2), q(1, 2)},
               {0, q(1, 2), 0, q(1, 2)}});
}

game::Nfpg example2_game() {
  const PolyExpr a2 = var(1, "a2");
  return make({"p1", "p2"}, {{}, {"a2", "b2"}}, {{q(-400, 81) * a2 + q(40, 9), 0}, {0, 0}});
}

game::Nfpg reciprocity_game(const Rational& t1, const Rational& t2) {
  const PolyExpr r = var(1, "reject");
  const PolyExpr kf = 2 - 4 * r, kg = 4 * r - 2;
  const Rational n1 = -4 * t1, p1 = 4 * t1, n2 = -4 * t2, p2 = 4 * t2;
  // Joint order: (fair,accept), (fair,reject), (greedy,accept), (greedy,reject).
  return make({"p1", "p2"}, {{"fair", "greedy"}, {"accept", "reject"}},
              {{5 + p1 * kf, 5 + n1 * kf, 9 + p1 * kg, 1 + n1 * kg},
               {5 + p2 * kf, 5 + n2 * kf, 1 + p2 * kg, 9 + n2 * kg}});
}

game::Nfpg ultimatum_game(const Rational& t1, const Rational& t2) {
  const PolyExpr r = var(1, "reject");
  const PolyExpr kf = 2 + q(1, 2) * r, kg = -2 - q(1, 2) * r;
  const Rational p1 = q(9, 2) * t1, n1 = -p1, p2 = q(9, 2) * t2, n2 = -p2;
  return make({"p1", "p2"}, {{"fair", "greedy"}, {"accept", "reject"}},
              {{5 + p1 * kf, 5 + n1 * kf, 9 + p1 * kg, n1 * kg},
               {5 + p2 * kf, 5 + n2 * kf, 1 + p2 * kg, n2 * kg}});
}

game::Nfpg crossing_game(const Rational& mu) {
  const PolyExpr r = var(0, "r"), m = var(0, "m"), w = var(1, "w"), c = var(1, "c");
  return make({"vehicle", "pedestrian"}, {{"r", "m"}, {"w", "c"}},
              {{1 - w, 1 + c, 1 + w, 1 - c}, {1 - r, 1 + r - mu * c, 1 + m, 1 - m - mu * c}});
}

game::Nfpg cyclist_vehicle_game() {
  const PolyExpr a = var(0, "a"), h = var(0, "h");
  // Per nature move, rows (y,g), (y,s), (w,g), (w,s), (c,g), (c,s).
  const long cyc[6] = {5, 3, -400, 15, -500, 20};
  const long cyc_h[6] = {8, 6, -400, 15, -500, 20};
  const long veh_a[6] = {7, 10, -500, 15, -300, 15};
  const long veh_h[6] = {15, 1, -400, 7, -200, 7};
  std::vector<std::vector<PolyExpr>> util(3);
  for (int k = 0; k < 6; ++k) {
    util[0].push_back(0);
    util[1].push_back(Rational(cyc[k]) * a);
    util[2].push_back(Rational(veh_a[k]));
  }
  for (int k = 0; k < 6; ++k) {
    util[0].push_back(0);
    util[1].push_back(Rational(cyc_h[k]) * h);
    util[2].push_back(Rational(veh_h[k]));
  }
  return make({"nature", "cyclist", "vehicle"}, {{"a", "h"}, {"y", "w", "c"}, {"g", "s"}}, std::move(util));
}

game::Nfpg cyclist_vehicle_bayes_game(const Rational& p) {
  auto lin = [&](long a, long b) { return PolyExpr(Rational(a * p + b)); };
  std::vector<PolyExpr> cyc = {lin(-3, 8), lin(-3, 6), -400, 15, -500, 20};
  std::vector<PolyExpr> veh = {lin(-8, 15), lin(9, 1), lin(-100, -400), lin(14, 7), lin(-100, -200), lin(8, 7)};
  return make({"cyclist", "vehicle"}, {{"y", "w", "c"}, {"g", "s"}}, {cyc, veh});
}

pcsg::Pcsg crossing_multi_game(const Rational& mu, const Rational& gamma, int k) {
  if (k < 0) throw ModelError(ErrorKind::RangeError, "horizon must be nonnegative");
  if (gamma < 0 || gamma > 1) throw ModelError(ErrorKind::RangeError, "gamma must lie in [0,1]");
  return pcsg::Pcsg(std::make_shared<CrossingMulti>(mu, gamma, k));
}

const std::vector<BuiltinModel>& builtin_models() {
  static const std::vector<BuiltinModel> catalog = [] {
    std::vector<BuiltinModel> m;
    const Rational zero = 0, one = 1;
    m.push_back({"confidence", "three players; player 1 proposes, players 2 and 3 accept or reject", ModelKind::Nfpg,
                 {}, kConfidence, [](const Bindings&) -> Model { return confidence_game(); }});
    m.push_back({"example2", "one active player whose partner's utility depends on its belief", ModelKind::Nfpg, {},
                 kExample2, [](const Bindings&) -> Model { return example2_game(); }});
    m.push_back({"reciprocity", "fair/greedy proposal met with reject/accept; kindness reciprocated",
                 ModelKind::Nfpg, {param("theta1", zero, one, one), param("theta2", zero, one, one)}, kReciprocity,
                 [](const Bindings& b) -> Model { return reciprocity_game(get(b, "theta1"), get(b, "theta2")); }});
    m.push_back({"ultimatum", "ultimatum game with reciprocity sensitivities", ModelKind::Nfpg,
                 {param("theta1", zero, one, one), param("theta2", zero, one, one)}, kUltimatum,
                 [](const Bindings& b) -> Model { return ultimatum_game(get(b, "theta1"), get(b, "theta2")); }});
    m.push_back({"crossing", "vehicle reduces or maintains speed; pedestrian waits or jaywalks", ModelKind::Nfpg,
                 {param("mu", zero, Rational(5), one)}, kCrossing,
                 [](const Bindings& b) -> Model { return crossing_game(get(b, "mu")); }});
    m.push_back({"cyclist_vehicle", "cyclist against a vehicle whose type nature picks", ModelKind::Nfpg, {},
                 kCyclist, [](const Bindings&) -> Model { return cyclist_vehicle_game(); }});
    m.push_back({"cyclist_vehicle_bayes", "two-player cyclist game mixed over vehicle types with AV share p",
                 ModelKind::Nfpg, {param("p", zero, one, q(9, 10))}, kCyclistBayes,
                 [](const Bindings& b) -> Model { return cyclist_vehicle_bayes_game(get(b, "p")); }});
    m.push_back({"crossing_multi", "repeated crossing game with imperfectly observed history counters",
                 ModelKind::Pcsg,
                 {param("mu", zero, Rational(5), one), param("gamma", zero, one, q(1, 2)),
                  param("k", one, Rational(10), Rational(5), true)},
                 kCrossingMulti, [](const Bindings& b) -> Model {
                   return crossing_multi_game(get(b, "mu"), get(b, "gamma"), get_int(b, "k"));
                 }});
    return m;
  }();
  return catalog;
}

const BuiltinModel* find_builtin(const std::string& name) {
  for (const auto& m : builtin_models())
    if (m.name == name) return &m;
  return nullptr;
}

Bindings resolve_params(const BuiltinModel& m, const Bindings& overrides) {
  Bindings out;
  for (const auto& [name, v] : overrides) {
    auto it = std::find_if(m.params.begin(), m.params.end(), [&](const ParamSpec& p) { return p.name == name; });
    if (it == m.params.end())
      throw ModelError(ErrorKind::UnknownIdentifier, "model '" + m.name + "' has no parameter '" + name + "'");
  }
  for (const auto& p : m.params) {
    auto it = overrides.find(p.name);
    if (it == overrides.end()) {
      if (!p.default_value) throw ModelError(ErrorKind::UnboundConstant, "no value for parameter '" + p.name + "'");
      out[p.name] = *p.default_value;
      continue;
    }
    const Rational& v = it->second;
    if (v < p.lo || v > p.hi)
      throw ModelError(ErrorKind::RangeError, "parameter '" + p.name + "' = " + v.get_str() + " outside [" +
                                                  p.lo.get_str() + ", " + p.hi.get_str() + "]");
    if (p.integer && v.get_den() != 1)
      throw ModelError(ErrorKind::RangeError, "parameter '" + p.name + "' must be an integer");
    out[p.name] = v;
  }
  return out;
}

}  // namespace pg::modelio
