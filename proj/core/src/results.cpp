#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pgsolve/modelio.hpp"

namespace pg::modelio {

namespace {

using nlohmann::json;
using Params = std::vector<std::pair<std::string, std::string>>;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void csv_line(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out += ',';
    out += csv_field(fields[k]);
  }
  out += '\n';
}

// Parameter columns in order of first appearance.
std::vector<std::string> param_names(const std::vector<const Params*>& all) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const auto* ps : all)
    for (const auto& [n, v] : *ps)
      if (seen.insert(n).second) names.push_back(n);
  return names;
}

std::vector<std::string> param_values(const std::vector<std::string>& names, const Params& ps) {
  std::vector<std::string> out;
  for (const auto& n : names) {
    std::string v;
    for (const auto& [pn, pv] : ps)
      if (pn == n) v = pv;
    out.push_back(v);
  }
  return out;
}

std::string header(std::uint64_t seed) { return "# seed=" + std::to_string(seed) + "\n"; }

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

json params_json(const Params& ps) {
  json out = json::array();
  for (const auto& [n, v] : ps) out.push_back({{"name", n}, {"value", v}});
  return out;
}

json row_json(const ResultRow& r) {
  json probs = json::array();
  for (const auto& player : r.probs) {
    json p = json::array();
    for (const auto& [a, x] : player) p.push_back({{"action", a}, {"prob", x}});
    probs.push_back(p);
  }
  return {{"support", r.support}, {"probs", probs}, {"utilities", r.utilities}, {"welfare", r.welfare},
          {"residual", r.residual}};
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

ResultRow make_row(const game::Nfpg& g, const game::EquilibriumCandidate& c) {
  ResultRow r;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    auto& sup = r.support.emplace_back();
    auto& pr = r.probs.emplace_back();
    for (std::size_t a = 0; a < g.num_actions(i); ++a) {
      const auto& name = g.actions(i)[a];
      if (c.support.contains(i, a)) sup.push_back(name);
      pr.emplace_back(name, c.profile.probs[i][a]);
    }
  }
  r.utilities = c.payoffs;
  r.welfare = c.welfare;
  r.residual = c.residual;
  return r;
}

std::string render_results(const std::vector<ResultRecord>& records, Format f, std::uint64_t seed) {
  if (f == Format::Json) {
    json recs = json::array();
    for (const auto& rec : records) {
      json rows = json::array();
      for (const auto& r : rec.rows) rows.push_back(row_json(r));
      recs.push_back({{"model", rec.model},
                      {"params", params_json(rec.params)},
                      {"players", rec.players},
                      {"rows", rows},
                      {"status", rec.status}});
    }
    return json{{"seed", seed}, {"records", recs}}.dump(2) + "\n";
  }
  std::vector<const Params*> all;
  for (const auto& rec : records) all.push_back(&rec.params);
  const auto names = param_names(all);
  std::string out = header(seed);
  std::vector<std::string> cols{"model"};
  for (const auto& n : names) cols.push_back("param:" + n);
  csv_line(out, concat(cols, {"eq_index", "player", "action", "prob", "utility", "welfare", "residual"}));
  for (const auto& rec : records) {
    const auto lead = concat({rec.model}, param_values(names, rec.params));
    if (rec.status != "ok") {
      csv_line(out, concat(lead, {"failed", "", rec.status, "", "", "", ""}));
      continue;
    }
    for (std::size_t e = 0; e < rec.rows.size(); ++e) {
      const auto& r = rec.rows[e];
      const std::string idx = std::to_string(e), w = format_number(r.welfare), res = format_number(r.residual);
      for (std::size_t i = 0; i < r.probs.size(); ++i)
        for (const auto& [a, x] : r.probs[i])
          csv_line(out, concat(lead, {idx, rec.players.at(i), a, format_number(x), "", w, res}));
      for (std::size_t i = 0; i < r.utilities.size(); ++i)
        csv_line(out, concat(lead, {idx, rec.players.at(i), "", "", format_number(r.utilities[i]), w, res}));
    }
  }
  return out;
}

void write_results(const std::vector<ResultRecord>& records, Format f, const std::string& destination,
                   std::uint64_t seed) {
  const std::string text = render_results(records, f, seed);
  if (destination.empty() || destination == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw IoError("failed writing to stdout");
    return;
  }
  std::ofstream os(destination, std::ios::binary);
  if (!os) throw IoError("cannot open '" + destination + "' for writing");
  os << text;
  os.close();
  if (!os) throw IoError("failed writing '" + destination + "'");
}

std::vector<ResultRecord> read_results_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    const json& recs = doc.is_array() ? doc : doc.at("records");
    std::vector<ResultRecord> out;
    for (const auto& jr : recs) {
      ResultRecord rec;
      rec.model = jr.at("model").get<std::string>();
      for (const auto& p : jr.at("params")) rec.params.emplace_back(p.at("name"), p.at("value"));
      rec.players = jr.at("players").get<std::vector<std::string>>();
      rec.status = jr.value("status", std::string("ok"));
      for (const auto& row : jr.at("rows")) {
        ResultRow r;
        r.support = row.at("support").get<std::vector<std::vector<std::string>>>();
        for (const auto& player : row.at("probs")) {
          auto& pr = r.probs.emplace_back();
          for (const auto& e : player) pr.emplace_back(e.at("action").get<std::string>(), e.at("prob").get<double>());
        }
        r.utilities = row.at("utilities").get<std::vector<double>>();
        r.welfare = row.at("welfare").get<double>();
        r.residual = row.at("residual").get<double>();
        rec.rows.push_back(std::move(r));
      }
      out.push_back(std::move(rec));
    }
    return out;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed results document: ") + e.what());
  }
}

// ---------------------------------------------------------------- pcsg reports

std::string render_experiment(const pcsg::ExperimentReport& rep, const std::string& model, const Params& params,
                              Format f, std::uint64_t seed) {
  if (f == Format::Json) {
    json probs = json::array();
    for (const auto& [key, vals] : rep.action_prob_runs)
      probs.push_back({{"class", key.first},
                       {"action", key.second},
                       {"runs", vals},
                       {"mean", rep.action_prob_mean.at(key)}});
    return json{{"seed", seed},
                {"model", model},
                {"params", params_json(params)},
                {"horizon", rep.horizon},
                {"runs", rep.runs},
                {"players", rep.players},
                {"run_utilities", rep.run_utilities},
                {"utility_mean", rep.utility_mean},
                {"utility_stddev", rep.utility_stddev},
                {"action_probs", probs}}
               .dump(2) +
           "\n";
  }
  const std::vector<std::string> names = param_names({&params});
  std::string out = header(seed);
  std::vector<std::string> cols{"model"};
  for (const auto& n : names) cols.push_back("param:" + n);
  csv_line(out, concat(cols, {"k", "run", "quantity", "player", "class", "action", "value"}));
  const auto lead = concat(concat({model}, param_values(names, params)), {std::to_string(rep.horizon)});
  for (std::size_t r = 0; r < rep.run_utilities.size(); ++r)
    for (std::size_t i = 0; i < rep.players.size(); ++i)
      csv_line(out, concat(lead, {std::to_string(r), "utility", rep.players[i], "", "",
                                  format_number(rep.run_utilities[r][i])}));
  for (std::size_t i = 0; i < rep.players.size(); ++i) {
    csv_line(out, concat(lead, {"mean", "utility", rep.players[i], "", "", format_number(rep.utility_mean[i])}));
    csv_line(out, concat(lead, {"stddev", "utility", rep.players[i], "", "", format_number(rep.utility_stddev[i])}));
  }
  for (const auto& [key, vals] : rep.action_prob_runs) {
    for (std::size_t r = 0; r < vals.size(); ++r)
      csv_line(out, concat(lead, {std::to_string(r), "action_prob", "", key.first, key.second, format_number(vals[r])}));
    csv_line(out, concat(lead, {"mean", "action_prob", "", key.first, key.second,
                                format_number(rep.action_prob_mean.at(key))}));
  }
  return out;
}

std::string render_values(const pcsg::ValueTable& vt, const pcsg::Pcsg& g, const std::string& model,
                          const Params& params, Format f, std::uint64_t seed) {
  const auto& players = g.players();
  if (f == Format::Json) {
    json states = json::array();
    for (int t = vt.horizon; t >= 1; --t)
      for (const auto& [id, cand] : vt.strategies[static_cast<std::size_t>(t)]) {
        const auto& info = vt.space.info[static_cast<std::size_t>(id)];
        json probs = json::array();
        for (std::size_t i = 0; i < info.actions.size(); ++i) {
          json p = json::array();
          for (std::size_t a = 0; a < info.actions[i].size(); ++a)
            p.push_back({{"action", info.actions[i][a]}, {"prob", cand.profile.probs[i][a]}});
          probs.push_back(p);
        }
        states.push_back({{"t", t},
                          {"state", pcsg::to_string(vt.space.states[static_cast<std::size_t>(id)], g.variables())},
                          {"probs", probs},
                          {"values", vt.values[static_cast<std::size_t>(t)].at(id)}});
      }
    return json{{"seed", seed},
                {"model", model},
                {"params", params_json(params)},
                {"horizon", vt.horizon},
                {"reachable_states", vt.space.states.size()},
                {"players", players},
                {"initial_values", vt.initial_values()},
                {"states", states}}
               .dump(2) +
           "\n";
  }
  const std::vector<std::string> names = param_names({&params});
  std::string out = header(seed) + "# reachable_states=" + std::to_string(vt.space.states.size()) + "\n";
  std::vector<std::string> cols{"model"};
  for (const auto& n : names) cols.push_back("param:" + n);
  csv_line(out, concat(cols, {"t", "state", "player", "action", "prob", "value"}));
  const auto lead = concat({model}, param_values(names, params));
  for (int t = vt.horizon; t >= 1; --t)
    for (const auto& [id, cand] : vt.strategies[static_cast<std::size_t>(t)]) {
      const auto& info = vt.space.info[static_cast<std::size_t>(id)];
      const std::string st = pcsg::to_string(vt.space.states[static_cast<std::size_t>(id)], g.variables());
      const auto ts = std::to_string(t);
      for (std::size_t i = 0; i < info.actions.size(); ++i)
        for (std::size_t a = 0; a < info.actions[i].size(); ++a)
          csv_line(out, concat(lead, {ts, st, players[i], info.actions[i][a],
                                      format_number(cand.profile.probs[i][a]), ""}));
      const auto& v = vt.values[static_cast<std::size_t>(t)].at(id);
      for (std::size_t i = 0; i < players.size(); ++i)
        csv_line(out, concat(lead, {ts, st, players[i], "", "", format_number(v[i])}));
    }
  return out;
}

}  // namespace pg::modelio
