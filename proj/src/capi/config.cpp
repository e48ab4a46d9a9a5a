#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "error.hpp"

namespace slc::app {

using nlohmann::json;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"measure", "llc",        "sllc", "bound", "audit",        "simulate",
                                              "experiment", "scan", "sync",  "reproduce-vdp"};
  return names;
}

namespace {

enum class Check { Any, Positive, NonNegative };

class Reader {
 public:
  Reader(const json& in, json& out, std::vector<std::string>& errors) : in_(in), out_(out), errors_(errors) {}

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = in_.find(key);
    return it == in_.end() ? nullptr : &*it;
  }
  void error(std::string msg) { errors_.push_back(std::move(msg)); }
  bool ok() const { return errors_.empty(); }
  json& out() { return out_; }

  std::optional<double> real(const std::string& key, std::optional<double> def, Check check) {
    const json* v = find(key);
    double x;
    if (!v) {
      if (!def) {
        error("missing required key '" + key + "'");
        return std::nullopt;
      }
      x = *def;
    } else {
      if (!v->is_number()) {
        error(key + " must be a number");
        return std::nullopt;
      }
      x = v->get<double>();
    }
    if (!std::isfinite(x)) {
      error(key + " must be finite");
      return std::nullopt;
    }
    if (check == Check::Positive && !(x > 0.0)) {
      error(key + " must be positive");
      return std::nullopt;
    }
    if (check == Check::NonNegative && !(x >= 0.0)) {
      error(key + " must be non-negative");
      return std::nullopt;
    }
    out_[key] = x;
    return x;
  }

  std::optional<std::size_t> count(const std::string& key, std::size_t def, std::size_t min) {
    const json* v = find(key);
    std::size_t x = def;
    if (v) {
      if (!v->is_number_integer()) {
        error(key + " must be an integer");
        return std::nullopt;
      }
      if (v->is_number_unsigned()) {
        x = v->get<std::size_t>();
      } else {
        const auto s = v->get<std::int64_t>();
        if (s < 0) {
          error(key + " must be at least " + std::to_string(min));
          return std::nullopt;
        }
        x = static_cast<std::size_t>(s);
      }
    }
    if (x < min) {
      error(key + " must be at least " + std::to_string(min));
      return std::nullopt;
    }
    out_[key] = x;
    return x;
  }

  std::optional<bool> boolean(const std::string& key, bool def) {
    const json* v = find(key);
    if (v && !v->is_boolean()) {
      error(key + " must be true or false");
      return std::nullopt;
    }
    const bool b = v ? v->get<bool>() : def;
    out_[key] = b;
    return b;
  }

  std::optional<std::vector<double>> reals(const std::string& key, const std::optional<std::vector<double>>& def) {
    const json* v = find(key);
    if (!v) {
      if (!def) {
        error("missing required key '" + key + "'");
        return std::nullopt;
      }
      out_[key] = *def;
      return def;
    }
    auto r = real_list(key, *v);
    if (r) out_[key] = *r;
    return r;
  }

  std::optional<std::vector<double>> real_list(const std::string& what, const json& v) {
    if (!v.is_array() || v.empty()) {
      error(what + " must be a non-empty list of numbers");
      return std::nullopt;
    }
    std::vector<double> r;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        error(what + " must contain only finite numbers");
        return std::nullopt;
      }
      r.push_back(e.get<double>());
    }
    return r;
  }

  std::optional<Matrix> matrix(const std::string& what, const json& v) {
    if (!v.is_array() || v.empty()) {
      error(what + " must be a non-empty list of rows");
      return std::nullopt;
    }
    const std::size_t rows = v.size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
      auto row = real_list(what + " row " + std::to_string(i + 1), v[i]);
      if (!row) return std::nullopt;
      if (row->size() != rows) {
        error(what + " must be square");
        return std::nullopt;
      }
      for (std::size_t j = 0; j < rows; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*row)[j];
    }
    return m;
  }

  void report_unknown(const std::string& subcommand) {
    for (auto it = in_.begin(); it != in_.end(); ++it)
      if (!seen_.count(it.key())) error("unknown key '" + it.key() + "' for subcommand '" + subcommand + "'");
  }

 private:
  const json& in_;
  json& out_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_norm(Reader& r, RunConfig& c, std::optional<std::size_t> n) {
  const json* v = r.find("norm");
  if (!v) {
    r.out()["norm"] = {{"kind", "L2"}};
    return;
  }
  json kind_json;
  const json* weight = nullptr;
  if (v->is_string()) {
    kind_json = *v;
  } else if (v->is_object()) {
    for (auto it = v->begin(); it != v->end(); ++it)
      if (it.key() != "kind" && it.key() != "weight") r.error("unknown key 'norm." + it.key() + "'");
    if (!v->contains("kind")) {
      r.error("missing required key 'norm.kind'");
      return;
    }
    kind_json = v->at("kind");
    if (v->contains("weight")) weight = &v->at("weight");
  } else {
    r.error("norm must be a string or an object with 'kind' and optional 'weight'");
    return;
  }
  if (!kind_json.is_string()) {
    r.error("norm.kind must be one of L1, L2, Linf");
    return;
  }
  NormKind kind;
  try {
    kind = parse_norm_kind(kind_json.get<std::string>());
  } catch (const Error& e) {
    r.error(e.what());
    return;
  }
  json canon{{"kind", std::string(to_string(kind))}};
  if (weight) {
    auto m = r.matrix("norm.weight", *weight);
    if (!m) return;
    if (n && static_cast<std::size_t>(m->rows()) != *n)
      r.error("norm.weight: expected dimension " + std::to_string(*n) + ", got " + std::to_string(m->rows()));
    try {
      c.norm = NormSpec(kind, *m);
    } catch (const Error& e) {
      r.error(std::string("norm.weight: ") + e.what());
      return;
    }
    canon["weight"] = *weight;
  } else {
    c.norm = NormSpec(kind);
  }
  r.out()["norm"] = canon;
}

std::optional<std::size_t> read_model(Reader& r, RunConfig& c) {
  const json* v = r.find("model");
  if (!v) {
    r.error("missing required key 'model'");
    return std::nullopt;
  }
  if (!v->is_object() || !v->contains("name") || !v->at("name").is_string()) {
    r.error("model must be an object with a string 'name' and optional 'params'");
    return std::nullopt;
  }
  for (auto it = v->begin(); it != v->end(); ++it)
    if (it.key() != "name" && it.key() != "params") r.error("unknown key 'model." + it.key() + "'");
  const std::string name = v->at("name").get<std::string>();
  const json params = v->contains("params") ? v->at("params") : json::object();
  r.out()["model"] = {{"name", name}, {"params", params}};
  try {
    c.model = builtin(name, params);
    return c.model->n;
  } catch (const Error& e) {
    r.error(e.what());
    return std::nullopt;
  }
}

void read_domain(Reader& r, RunConfig& c, std::optional<std::size_t> n, bool required) {
  const json* v = r.find("domain");
  if (!v) {
    if (required) r.error("missing required key 'domain' (the domain box is never chosen implicitly)");
    return;
  }
  if (!v->is_object() || !v->contains("lo") || !v->contains("hi")) {
    r.error("domain must be an object with 'lo' and 'hi' lists");
    return;
  }
  auto lo = r.real_list("domain.lo", v->at("lo"));
  auto hi = r.real_list("domain.hi", v->at("hi"));
  if (!lo || !hi) return;
  if (n && lo->size() != *n) {
    r.error("domain: expected dimension " + std::to_string(*n) + ", got " + std::to_string(lo->size()));
    return;
  }
  try {
    c.domain.emplace(*lo, *hi);
    r.out()["domain"] = {{"lo", *lo}, {"hi", *hi}};
  } catch (const Error& e) {
    r.error(std::string("domain: ") + e.what());
  }
}

void read_ladder(Reader& r, const std::string& key, std::vector<double>& target, std::span<const double> def,
                 bool halving) {
  auto v = r.reals(key, std::vector<double>(def.begin(), def.end()));
  if (!v) return;
  try {
    validate_ladder(*v, halving);
    target = *v;
  } catch (const Error& e) {
    r.error(key + ": " + e.what());
  }
}

void read_mode(Reader& r, RunConfig& c) {
  const json* v = r.find("mode");
  if (v) {
    const std::string s = v->is_string() ? v->get<std::string>() : "";
    if (s == "s-lub") {
      c.mode = LipschitzMode::StrongLub;
    } else if (s == "lub") {
      c.mode = LipschitzMode::Lub;
    } else {
      r.error("mode must be 's-lub' or 'lub'");
      return;
    }
  }
  r.out()["mode"] = std::string(to_string(c.mode));
}

void read_pairs(Reader& r, RunConfig& c) {
  PairSamplingConfig p;
  p.rng_seed = c.seed ^ 0x9e3779b97f4a7c15ULL;
  const json* v = r.find("pairs");
  if (v) {
    if (!v->is_object()) {
      r.error("pairs must be an object");
      return;
    }
    json empty_out;
    std::vector<std::string> errors;
    Reader sub(*v, empty_out, errors);
    if (auto x = sub.count("num_pairs", p.num_pairs, 1)) p.num_pairs = *x;
    if (auto x = sub.reals("scales", p.pair_scales)) p.pair_scales = *x;
    if (auto x = sub.count("refine_top", p.refine_top, 0)) p.refine_top = *x;
    if (auto x = sub.count("refine_budget", p.refine_budget, 0)) p.refine_budget = *x;
    if (auto x = sub.boolean("structured_directions", p.structured_directions)) p.structured_directions = *x;
    sub.report_unknown("pairs");
    for (auto& e : errors) r.error("pairs." + e);
  }
  try {
    p.validate();
  } catch (const Error& e) {
    r.error(std::string("pairs: ") + e.what());
  }
  c.pairs = p;
  r.out()["pairs"] = {{"num_pairs", p.num_pairs},
                      {"scales", p.pair_scales},
                      {"refine_top", p.refine_top},
                      {"refine_budget", p.refine_budget},
                      {"structured_directions", p.structured_directions}};
}

void read_initials(Reader& r, RunConfig& c, std::optional<std::size_t> n, std::size_t min, std::size_t max,
                   const std::optional<std::vector<Vector>>& def) {
  const json* v = r.find("initials");
  if (!v) {
    if (!def) {
      r.error("missing required key 'initials'");
      return;
    }
    c.initials = *def;
  } else {
    if (!v->is_array()) {
      r.error("initials must be a list of states");
      return;
    }
    c.initials.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      auto s = r.real_list("initials[" + std::to_string(i) + "]", (*v)[i]);
      if (!s) return;
      if (n && s->size() != *n) {
        r.error("initials[" + std::to_string(i) + "]: expected dimension " + std::to_string(*n) + ", got " +
                std::to_string(s->size()));
        return;
      }
      c.initials.push_back(Eigen::Map<const Vector>(s->data(), static_cast<Eigen::Index>(s->size())));
    }
  }
  if (c.initials.size() < min || c.initials.size() > max) {
    r.error(max == min ? "initials must hold exactly " + std::to_string(min) + " states"
                       : "initials must hold at least " + std::to_string(min) + " states");
    return;
  }
  json out = json::array();
  for (const auto& x : c.initials) out.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  r.out()["initials"] = out;
}

void read_window(Reader& r, RunConfig& c, std::optional<std::pair<double, double>> def) {
  const json* v = r.find("window");
  std::optional<std::pair<double, double>> w = def;
  if (v) {
    auto list = r.real_list("window", *v);
    if (!list) return;
    if (list->size() != 2) {
      r.error("window must be [t_lo, t_hi]");
      return;
    }
    w = std::make_pair((*list)[0], (*list)[1]);
  }
  if (!w) return;
  if (!(w->first >= 0.0 && w->first < w->second && w->second <= c.T + 1e-12 * c.T)) {
    r.error("window must satisfy 0 <= t_lo < t_hi <= T");
    return;
  }
  c.window_lo = w->first;
  c.window_hi = w->second;
  r.out()["window"] = {w->first, w->second};
}

void read_simulation(Reader& r, RunConfig& c, std::optional<double> default_T, std::size_t default_stride) {
  if (auto x = r.real("T", default_T, Check::Positive)) c.T = *x;
  if (auto x = r.real("h", 1e-3, Check::Positive)) c.h = *x;
  if (auto x = r.count("realizations", 1000, 1)) c.realizations = *x;
  if (auto x = r.count("record_stride", default_stride, 1)) c.record_stride = *x;
  if (auto x = r.real("l", 2.0, Check::Positive)) {
    if (*x < 1.0)
      r.error("l must be at least 1");
    else
      c.l = *x;
  }
  if (r.ok()) {
    try {
      const std::size_t steps = step_count(c.T, c.h);
      if (steps % c.record_stride != 0) r.error("record_stride must divide the number of steps T/h");
    } catch (const Error& e) {
      r.error(e.what());
    }
  }
}

void read_sllc(Reader& r, RunConfig& c) {
  read_ladder(r, "sllc_ladder", c.sllc_ladder, std::vector<double>{8e-4, 4e-4, 2e-4, 1e-4}, true);
  if (auto x = r.count("mc_samples", 20000, 1000)) c.mc_samples = *x;
  if (auto x = r.count("screen_samples", 512, 2)) c.screen_samples = *x;
  if (auto x = r.count("final_candidates", 4, 1)) c.final_candidates = *x;
  if (auto x = r.real("l", 2.0, Check::Positive)) {
    if (*x < 1.0)
      r.error("l must be at least 1");
    else
      c.l = *x;
  }
}

}  // namespace

Validation validate(const std::string& subcommand, const std::string& config_text, const RunOverrides& overrides) {
  Validation v;
  json in;
  if (config_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    in = json::object();
  } else {
    try {
      in = json::parse(config_text);
    } catch (const json::parse_error& e) {
      v.errors.push_back(std::string("config is not valid JSON: ") + e.what());
      return v;
    }
  }
  if (!in.is_object()) {
    v.errors.push_back("config must be a JSON object");
    return v;
  }

  RunConfig c;
  json out = json::object();
  Reader r(in, out, v.errors);

  std::string sub = subcommand;
  if (const json* s = r.find("subcommand")) {
    if (!s->is_string()) {
      r.error("subcommand must be a string");
    } else if (sub.empty()) {
      sub = s->get<std::string>();
    } else if (s->get<std::string>() != sub) {
      r.error("config subcommand '" + s->get<std::string>() + "' does not match requested '" + sub + "'");
    }
  }
  const auto& names = subcommands();
  if (sub.empty()) {
    r.error("no subcommand given");
    return v;
  }
  if (std::find(names.begin(), names.end(), sub) == names.end()) {
    r.error("unknown subcommand '" + sub + "'");
    return v;
  }
  c.subcommand = sub;
  out["subcommand"] = sub;

  if (const json* s = r.find("seed")) {
    if (!s->is_number_unsigned())
      r.error("seed must be a non-negative 64-bit integer");
    else
      c.seed = s->get<std::uint64_t>();
  }
  if (overrides.seed) c.seed = *overrides.seed;
  out["seed"] = c.seed;

  if (const json* d = r.find("output_dir")) {
    if (!d->is_string() || d->get<std::string>().empty())
      r.error("output_dir must be a non-empty string");
    else
      c.output_dir = d->get<std::string>();
  }

  const bool simulates = sub == "simulate" || sub == "experiment" || sub == "sync" || sub == "scan" || sub == "reproduce-vdp";
  if (overrides.realizations && !simulates) r.error("--realizations does not apply to '" + sub + "'");

  std::optional<std::size_t> n;
  if (sub == "measure") {
    if (const json* m = r.find("matrix")) {
      if (auto a = r.matrix("matrix", *m)) {
        c.matrix = *a;
        n = static_cast<std::size_t>(a->rows());
        out["matrix"] = *m;
      }
    } else {
      r.error("missing required key 'matrix'");
    }
    read_norm(r, c, n);
    read_ladder(r, "ladder", c.ladder, default_measure_ladder(), false);
  } else if (sub == "reproduce-vdp" || sub == "scan") {
    n = 2;
    if (sub == "reproduce-vdp") {
      if (auto x = r.real("sigma", 0.35, Check::Positive)) c.sigma = *x;
      if (auto x = r.count("path_stride", 100, 1)) c.path_stride = *x;
    } else {
      if (auto x = r.reals("sigmas", std::nullopt)) {
        if (std::any_of(x->begin(), x->end(), [](double s) { return !(s > 0.0); }))
          r.error("sigmas must be positive");
        else
          c.sigmas = *x;
      }
      read_domain(r, c, n, true);
      if (auto x = r.count("grid", 41, 2)) c.grid = *x;
    }
    Vector a(2), b(2);
    a << 1.0, -1.0;
    b << 2.0, -2.0;
    read_initials(r, c, n, 2, 2, std::vector<Vector>{a, b});
    read_norm(r, c, n);
    read_simulation(r, c, sub == "reproduce-vdp" ? std::optional<double>(50.0) : std::nullopt,
                    sub == "reproduce-vdp" ? 100 : 1);
    if (r.ok())
      read_window(r, c, sub == "reproduce-vdp" ? std::optional(std::make_pair(0.1 * c.T, c.T)) : std::nullopt);
    if (sub == "reproduce-vdp" && r.ok()) {
      const std::size_t steps = step_count(c.T, c.h);
      if (steps % c.path_stride != 0) r.error("path_stride must divide the number of steps T/h");
    }
  } else {
    n = read_model(r, c);
    read_norm(r, c, n);
    if (sub == "llc") {
      read_domain(r, c, n, true);
      read_ladder(r, "ladder", c.ladder, default_llc_ladder(), false);
      read_mode(r, c);
      read_pairs(r, c);
      if (auto x = r.count("grid", 41, 2)) c.grid = *x;
    } else if (sub == "sllc" || sub == "bound" || sub == "audit") {
      read_domain(r, c, n, true);
      read_pairs(r, c);
      read_ladder(r, "ladder", c.ladder, default_llc_ladder(), false);
      if (sub == "bound") {
        if (auto x = r.real("l", 2.0, Check::Positive)) {
          if (*x < 1.0)
            r.error("l must be at least 1");
          else
            c.l = *x;
        }
      } else {
        read_sllc(r, c);
        read_mode(r, c);
      }
      if (sub != "sllc")
        if (auto x = r.count("grid", 41, 2)) c.grid = *x;
      if (sub == "audit")
        if (auto x = r.real("tolerance", 1e-3, Check::NonNegative)) c.tolerance = *x;
    } else if (sub == "simulate") {
      read_initials(r, c, n, 1, SIZE_MAX, std::nullopt);
      read_simulation(r, c, std::nullopt, 1);
      if (auto x = r.count("paths", 1, 0)) c.paths = *x;
    } else if (sub == "experiment") {
      read_initials(r, c, n, 2, 2, std::nullopt);
      read_simulation(r, c, std::nullopt, 1);
      if (r.ok()) read_window(r, c, std::nullopt);
      if (auto x = r.boolean("expect_decay", false)) c.expect_decay = *x;
      read_domain(r, c, n, false);
      if (auto x = r.count("grid", 41, 2)) c.grid = *x;
      if (auto x = r.boolean("sllc_check", false)) c.sllc_check = *x;
      if (c.sllc_check) {
        if (!c.domain) r.error("sllc_check needs a 'domain'");
        read_pairs(r, c);
        read_ladder(r, "ladder", c.ladder, default_llc_ladder(), false);
        read_sllc(r, c);
        read_mode(r, c);
      }
    } else if (sub == "sync") {
      read_initials(r, c, n, 2, SIZE_MAX, std::nullopt);
      read_simulation(r, c, std::nullopt, 1);
      if (r.ok()) read_window(r, c, std::nullopt);
      if (auto x = r.real("threshold", 1e-2, Check::Positive)) c.threshold = *x;
    }
  }
  if (overrides.realizations && simulates) {
    if (*overrides.realizations < 1)
      r.error("realizations must be at least 1");
    else {
      c.realizations = *overrides.realizations;
      out["realizations"] = c.realizations;
    }
  }
  if (c.realizations > 0xffffffffULL) r.error("realizations must fit in 32 bits");
  r.report_unknown(sub);
  if (!v.errors.empty()) return v;
  c.resolved = std::move(out);
  v.config = std::move(c);
  return v;
}

}  // namespace slc::app
