#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pgsolve/game.hpp"
#include "pgsolve/modelio.hpp"
#include "pgsolve/nlp.hpp"
#include "pgsolve/pcsg.hpp"

namespace pg::cli {

namespace {

using modelio::Bindings;
using modelio::Format;
using modelio::ResultRecord;
using Params = std::vector<std::pair<std::string, std::string>>;

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SweepSpec {
  std::string name;
  Rational lo, hi, step;
};

struct Options {
  std::string model;
  std::vector<std::string> constants;
  std::vector<std::string> sweeps;
  std::string output;
  std::string format = "csv";
  bool all = false;
  bool no_solve = false;
  std::uint64_t seed = 0;
  int starts = nlp::SolverConfig{}.starts;
  double feas_tol = nlp::SolverConfig{}.feas_tol;
  double opt_tol = nlp::SolverConfig{}.opt_tol;
  int max_iters = nlp::SolverConfig{}.max_iters;
  int threads = 0;
  int k = 0;
  int runs = 0;
  std::string profile;
};

// A loaded model before parameters are bound.
struct Source {
  std::string id;
  const modelio::BuiltinModel* builtin = nullptr;
  modelio::ModelAst ast;
};

Source load(const std::string& name) {
  Source s;
  s.id = name;
  if (const auto* m = modelio::find_builtin(name)) {
    s.builtin = m;
    return s;
  }
  std::ifstream in(name, std::ios::binary);
  if (!in) throw Usage("'" + name + "' is neither a bundled model nor a readable file");
  std::stringstream ss;
  ss << in.rdbuf();
  s.ast = modelio::parse_model(ss.str());
  return s;
}

std::string render(const Rational& q) { return modelio::format_number(q.get_d()); }

Bindings parse_constants(const std::vector<std::string>& items) {
  Bindings out;
  for (const auto& it : items) {
    auto eq = it.find('=');
    if (eq == std::string::npos || eq == 0) throw Usage("expected name=value, got '" + it + "'");
    try {
      out[it.substr(0, eq)] = parse_rational(it.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw Usage(e.what());
    }
  }
  return out;
}

SweepSpec parse_sweep(const std::string& text) {
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw Usage("expected name=lo:hi:step, got '" + text + "'");
  SweepSpec s;
  s.name = text.substr(0, eq);
  std::vector<std::string> parts;
  std::stringstream ss(text.substr(eq + 1));
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw Usage("expected name=lo:hi:step, got '" + text + "'");
  try {
    s.lo = parse_rational(parts[0]);
    s.hi = parse_rational(parts[1]);
    s.step = parse_rational(parts[2]);
  } catch (const std::invalid_argument& e) {
    throw Usage(e.what());
  }
  if (s.lo > s.hi) throw Usage("sweep '" + s.name + "' has lo > hi");
  if (s.step <= 0) throw Usage("sweep '" + s.name + "' needs a positive step");
  return s;
}

// Bindings and their rendering for a model at given overrides.
std::pair<Bindings, Params> bind_params(const Source& src, const Bindings& overrides) {
  Bindings b = src.builtin ? modelio::resolve_params(*src.builtin, overrides) : overrides;
  Params shown;
  if (src.builtin) {
    for (const auto& p : src.builtin->params) shown.emplace_back(p.name, render(b.at(p.name)));
  } else {
    for (const auto& c : src.ast.constants)
      if (auto it = b.find(c.name); it != b.end()) shown.emplace_back(c.name, render(it->second));
  }
  return {b, shown};
}

// A model constant named k follows the horizon unless bound with -c.
Bindings with_horizon(const Source& src, Bindings b, int k) {
  if (b.count("k")) return b;
  bool declared = false;
  if (src.builtin) {
    for (const auto& p : src.builtin->params) declared = declared || p.name == "k";
  } else {
    for (const auto& c : src.ast.constants) declared = declared || c.name == "k";
  }
  if (declared) b["k"] = Rational(k);
  return b;
}

modelio::Model instantiate(const Source& src, const Bindings& b) {
  if (src.builtin) return src.builtin->construct(b);
  return modelio::elaborate(src.ast, b);
}

nlp::SolverConfig solver_config(const Options& o) {
  nlp::SolverConfig cfg;
  cfg.seed = o.seed;
  cfg.starts = o.starts;
  cfg.feas_tol = o.feas_tol;
  cfg.opt_tol = o.opt_tol;
  cfg.max_iters = o.max_iters;
  cfg.threads = o.threads;
  if (cfg.threads <= 0) {
    cfg.threads = 1;
    if (const char* env = std::getenv("PG_THREADS")) {
      try {
        cfg.threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        throw Usage("PG_THREADS must be an integer");
      }
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw Usage(e.what());
  }
  return cfg;
}

Format format_of(const Options& o) {
  if (o.format == "csv") return Format::Csv;
  if (o.format == "json") return Format::Json;
  throw Usage("unknown format '" + o.format + "'");
}

void emit(const std::string& text, const Options& o, std::ostream& out) {
  if (o.output.empty() || o.output == "-") {
    out << text;
    return;
  }
  std::ofstream os(o.output, std::ios::binary);
  if (!os) throw modelio::IoError("cannot open '" + o.output + "' for writing");
  os << text;
  if (!os) throw modelio::IoError("failed writing '" + o.output + "'");
}

const game::Nfpg& as_nfpg(const modelio::Model& m) {
  if (!std::holds_alternative<game::Nfpg>(m)) throw Usage("this command needs a normal-form model");
  return std::get<game::Nfpg>(m);
}

const pcsg::Pcsg& as_pcsg(const modelio::Model& m) {
  if (!std::holds_alternative<pcsg::Pcsg>(m)) throw Usage("this command needs a pcsg model");
  return std::get<pcsg::Pcsg>(m);
}

ResultRecord solve_point(const Source& src, const Bindings& b, const Params& shown, const Options& o) {
  const game::Nfpg g = as_nfpg(instantiate(src, b));
  ResultRecord rec;
  rec.model = src.id;
  rec.params = shown;
  rec.players = g.players();
  const auto res = nlp::find_swpe(g, solver_config(o));
  if (o.all) {
    for (const auto& c : res.all) rec.rows.push_back(modelio::make_row(g, c));
  } else {
    rec.rows.push_back(modelio::make_row(g, res.best));
  }
  return rec;
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  const Source src = load(o.model);
  auto [b, shown] = bind_params(src, parse_constants(o.constants));
  try {
    auto rec = solve_point(src, b, shown, o);
    emit(modelio::render_results({rec}, format_of(o), o.seed), o, out);
  } catch (const nlp::NoEquilibriumFound& e) {
    err << "pgsolve: " << e.what() << "\n";
    return kNoEquilibrium;
  }
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.sweeps.empty()) throw Usage("sweep needs at least one --sweep name=lo:hi:step");
  const Source src = load(o.model);
  const Bindings fixed = parse_constants(o.constants);
  std::vector<SweepSpec> specs;
  for (const auto& s : o.sweeps) specs.push_back(parse_sweep(s));
  std::vector<std::vector<Rational>> axes;
  for (const auto& s : specs) {
    auto& ax = axes.emplace_back();
    for (Rational v = s.lo; v <= s.hi; v += s.step) ax.push_back(v);
  }
  const Format f = format_of(o);
  solver_config(o);
  std::vector<ResultRecord> records;
  std::vector<std::size_t> idx(specs.size(), 0);
  while (true) {
    Bindings b = fixed;
    for (std::size_t d = 0; d < specs.size(); ++d) b[specs[d].name] = axes[d][idx[d]];
    ResultRecord rec;
    try {
      auto [bound, shown] = bind_params(src, b);
      rec.params = shown;
      try {
        rec = solve_point(src, bound, shown, o);
      } catch (const nlp::NoEquilibriumFound& e) {
        rec.model = src.id;
        rec.params = shown;
        rec.status = e.what();
      }
    } catch (const modelio::ModelError& e) {
      rec.model = src.id;
      for (const auto& [n, v] : b) rec.params.emplace_back(n, render(v));
      rec.status = e.what();
    }
    if (rec.status != "ok") err << "pgsolve: point failed: " << rec.status << "\n";
    records.push_back(std::move(rec));
    std::size_t d = specs.size();
    while (d-- > 0) {
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
    }
    if (d == static_cast<std::size_t>(-1)) break;
  }
  emit(modelio::render_results(records, f, o.seed), o, out);
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.profile.empty()) throw Usage("verify needs --profile action=prob,...");
  const Source src = load(o.model);
  auto [b, shown] = bind_params(src, parse_constants(o.constants));
  const game::Nfpg g = as_nfpg(instantiate(src, b));
  std::vector<std::pair<std::string, double>> named;
  std::stringstream ss(o.profile);
  for (std::string item; std::getline(ss, item, ',');) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw Usage("expected action=prob in profile, got '" + item + "'");
    try {
      named.emplace_back(item.substr(0, eq), parse_rational(item.substr(eq + 1)).get_d());
    } catch (const std::invalid_argument& e) {
      throw Usage(e.what());
    }
  }
  game::StrategyProfile p;
  try {
    p = game::profile_from_names(g, named);
  } catch (const std::exception& e) {
    throw Usage(e.what());
  }
  const auto cfg = solver_config(o);
  const auto v = game::verify_pe(g, p, cfg.feas_tol);
  ResultRecord rec;
  rec.model = src.id;
  rec.params = shown;
  rec.players = g.players();
  auto c = game::make_candidate(g, p);
  c.residual = v.residual;
  rec.rows.push_back(modelio::make_row(g, c));
  emit(modelio::render_results({rec}, format_of(o), o.seed), o, out);
  if (!v.is_pe) err << "pgsolve: not an equilibrium (residual " << modelio::format_number(v.residual) << ")\n";
  return v.is_pe ? kOk : kNoEquilibrium;
}

int cmd_csg(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.k < 1) throw Usage("csg needs -k >= 1");
  const Source src = load(o.model);
  auto [b, shown] = bind_params(src, with_horizon(src, parse_constants(o.constants), o.k));
  const auto model = instantiate(src, b);
  const pcsg::Pcsg& g = as_pcsg(model);
  const auto cfg = solver_config(o);
  const Format f = format_of(o);
  try {
    if (o.runs > 0) {
      auto rep = pcsg::run_experiments(g, o.k, o.runs, cfg, o.seed);
      emit(modelio::render_experiment(rep, src.id, shown, f, o.seed), o, out);
    } else {
      auto vt = pcsg::backward_induction(g, o.k, cfg, pcsg::Selection::sw_optimal());
      emit(modelio::render_values(vt, g, src.id, shown, f, o.seed), o, out);
    }
  } catch (const pcsg::StageFailure& e) {
    err << "pgsolve: " << e.what() << "\n";
    return kNoEquilibrium;
  }
  return kOk;
}

int cmd_stats(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.k < 1) throw Usage("stats needs -k >= 1");
  const Source src = load(o.model);
  auto [b, shown] = bind_params(src, with_horizon(src, parse_constants(o.constants), o.k));
  const auto model = instantiate(src, b);
  const pcsg::Pcsg& g = as_pcsg(model);
  const auto st = pcsg::model_stats(g, o.k);
  std::string seconds;
  if (!o.no_solve) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      pcsg::backward_induction(g, o.k, solver_config(o), pcsg::Selection::sw_optimal());
    } catch (const pcsg::StageFailure& e) {
      err << "pgsolve: " << e.what() << "\n";
      return kNoEquilibrium;
    }
    seconds = modelio::format_number(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::string text = "# seed=" + std::to_string(o.seed) + "\nmodel";
  for (const auto& [n, v] : shown) text += ",param:" + n;
  text += ",k,states,transitions,seconds\n" + src.id;
  for (const auto& [n, v] : shown) text += "," + v;
  text += "," + std::to_string(o.k) + "," + std::to_string(st.states) + "," + std::to_string(st.transitions) + "," +
          seconds + "\n";
  if (format_of(o) == Format::Json) {
    std::string j = "{\n  \"seed\": " + std::to_string(o.seed) + ",\n  \"model\": \"" + src.id + "\",\n  \"k\": " +
                    std::to_string(o.k) + ",\n  \"states\": " + std::to_string(st.states) +
                    ",\n  \"transitions\": " + std::to_string(st.transitions) +
                    (seconds.empty() ? "" : ",\n  \"seconds\": " + seconds) + "\n}\n";
    text = j;
  }
  emit(text, o, out);
  return kOk;
}

int cmd_list(std::ostream& out) {
  for (const auto& m : modelio::builtin_models()) {
    out << m.name << " (" << (m.kind == modelio::ModelKind::Nfpg ? "nfpg" : "pcsg") << ")";
    for (const auto& p : m.params) {
      out << " " << p.name << "=" << (p.default_value ? render(*p.default_value) : "?") << " in [" << render(p.lo)
          << "," << render(p.hi) << "]";
    }
    out << "\n    " << m.description << "\n";
  }
  return kOk;
}

void add_common(CLI::App* sub, Options& o, bool with_model = true) {
  if (with_model) sub->add_option("model", o.model, "Bundled model name or .pg file")->required();
  sub->add_option("-c,--const", o.constants, "Bind a constant, name=value (repeatable)");
  sub->add_option("-o,--output", o.output, "Output path ('-' for stdout)");
  sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--starts", o.starts, "Multistart count per support");
  sub->add_option("--feas-tol", o.feas_tol, "Feasibility tolerance");
  sub->add_option("--opt-tol", o.opt_tol, "Optimality tolerance");
  sub->add_option("--max-iters", o.max_iters, "Iteration cap per start");
  sub->add_option("--threads", o.threads, "Worker threads (default: PG_THREADS or 1)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibria of psychological games and stochastic games with psychological rewards", "pgsolve"};
  app.require_subcommand(1);
  Options o;
  auto* solve = app.add_subcommand("solve", "Social-welfare optimal equilibrium of a normal-form model");
  add_common(solve, o);
  solve->add_flag("--all", o.all, "Emit every equilibrium candidate");
  auto* verify = app.add_subcommand("verify", "Check whether a profile is an equilibrium");
  add_common(verify, o);
  verify->add_option("--profile", o.profile, "Comma separated action=prob list")->required();
  auto* sweep = app.add_subcommand("sweep", "Solve over a parameter grid");
  add_common(sweep, o);
  sweep->add_flag("--all", o.all, "Emit every equilibrium candidate");
  sweep->add_option("--sweep", o.sweeps, "name=lo:hi:step (repeatable, Cartesian product)")->required();
  auto* csg = app.add_subcommand("csg", "Backward induction or randomized experiments on a pcsg");
  add_common(csg, o);
  csg->add_option("-k", o.k, "Horizon")->required();
  csg->add_option("-r,--runs", o.runs, "Experiment runs with random equilibrium selection");
  auto* stats = app.add_subcommand("stats", "States, transitions and solve time of a pcsg");
  add_common(stats, o);
  stats->add_option("-k", o.k, "Horizon")->required();
  stats->add_flag("--no-solve", o.no_solve, "Skip the timed solve");
  auto* list = app.add_subcommand("list-models", "List bundled models");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    const auto* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    if (e.get_exit_code() == 0) {
      out << failing->help();
      return kOk;
    }
    err << "pgsolve: " << e.what() << "\n";
    return kUsage;
  }
  try {
    if (solve->parsed()) return cmd_solve(o, out, err);
    if (verify->parsed()) return cmd_verify(o, out, err);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (csg->parsed()) return cmd_csg(o, out, err);
    if (stats->parsed()) return cmd_stats(o, out, err);
    if (list->parsed()) return cmd_list(out);
  } catch (const Usage& e) {
    err << "pgsolve: " << e.what() << "\n";
    return kUsage;
  } catch (const modelio::ModelError& e) {
    err << "pgsolve: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "pgsolve: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace pg::cli
