#include "aipw/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace aipw {

namespace {

using boost::property_tree::ptree;

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, where + ": " + msg);
}

std::string trimmed(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trimmed(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Reads one section and rejects keys outside `allowed`.
class Section {
 public:
  Section(std::string name, const ptree& tree, std::set<std::string> allowed) : name_(std::move(name)), tree_(tree) {
    for (const auto& [key, child] : tree_) {
      if (!child.empty()) fail("[" + name_ + "]", "nested keys are not supported");
      if (!allowed.count(key) && !allowed_prefix(allowed, key)) fail("[" + name_ + "]", "unknown key '" + key + "'");
    }
  }

  std::optional<std::string> get(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trimmed(*v);
  }

  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

  double number(const std::string& key, double fallback) const {
    auto v = get(key);
    return v ? to_double(key, *v) : fallback;
  }

  std::optional<double> optional_number(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    return to_double(key, *v);
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || end != v->data() + v->size()) fail(where(key), "expected a nonnegative integer, got '" + *v + "'");
    return out;
  }

  bool boolean(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    const std::string s = lower(*v);
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    fail(where(key), "expected true or false, got '" + *v + "'");
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split(*get(key), ',')) out.push_back(to_double(key, item));
    return out;
  }

  const ptree& tree() const { return tree_; }

  double to_double(const std::string& key, const std::string& s) const {
    double v = 0.0;
    const char* begin = s.data() + (s.size() > 0 && s[0] == '+' ? 1 : 0);
    const auto [end, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
      fail(where(key), "expected a finite number, got '" + s + "'");
    }
    return v;
  }

 private:
  static bool allowed_prefix(const std::set<std::string>& allowed, const std::string& key) {
    // Keys like "x3" or "term2" are allowed when "x#" or "term#" is listed.
    for (const auto& a : allowed) {
      if (a.empty() || a.back() != '#') continue;
      const std::string prefix = a.substr(0, a.size() - 1);
      if (key.size() > prefix.size() && key.compare(0, prefix.size(), prefix) == 0 &&
          std::all_of(key.begin() + static_cast<std::ptrdiff_t>(prefix.size()), key.end(),
                      [](unsigned char c) { return std::isdigit(c); })) {
        return true;
      }
    }
    return false;
  }

  std::string name_;
  const ptree& tree_;
};

BasisSpec read_basis(const Section& s) {
  BasisSpec b;
  b.intercept = s.boolean("intercept", true);
  if (auto cols = s.get("columns")) b.columns = split(*cols, ',');
  if (b.size() == 0) fail(s.where("columns"), "basis is empty");
  return b;
}

FitMode parse_mode(const std::string& where, const std::string& text) {
  const std::string s = lower(text);
  if (s == "ols") return FitMode::OLS;
  if (s == "wls") return FitMode::WLS;
  if (s == "srr") return FitMode::SRR;
  fail(where, "unknown fit mode '" + text + "' (ols, wls, srr)");
}

std::size_t parse_index(const std::string& where, const std::string& s) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || v == 0) fail(where, "latent index must be a positive integer");
  return v - 1;
}

double parse_real(const std::string& where, const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) fail(where, "bad number '" + s + "'");
  return v;
}

void read_simulate(const Section& s, SimulateSection& sim) {
  const std::string preset = lower(s.get("preset").value_or("default"));
  if (preset == "default") {
    sim.spec = DgpSpec::default_spec();
  } else if (preset == "mirror") {
    sim.spec = DgpSpec::mirror_spec();
  } else {
    fail(s.where("preset"), "unknown preset '" + preset + "' (default, mirror)");
  }
  DgpSpec& spec = sim.spec;
  if (s.get("q")) {
    spec.q = s.integer("q", spec.q);
    if (!s.get("beta") || !s.get("alpha")) fail(s.where("q"), "changing q requires beta and alpha");
  }
  spec.beta0 = s.number("beta0", spec.beta0);
  spec.sigma = s.number("sigma", spec.sigma);
  spec.alpha0 = s.number("alpha0", spec.alpha0);
  if (s.get("beta")) spec.beta = s.numbers("beta");
  if (s.get("alpha")) spec.alpha = s.numbers("alpha");

  std::map<std::size_t, Transform> transforms;
  std::map<std::size_t, std::pair<double, Transform>> terms;
  for (const auto& [key, child] : s.tree()) {
    const std::string value = trimmed(child.data());
    if (key.size() > 1 && key[0] == 'x') {
      transforms[parse_index(s.where(key), key.substr(1))] = parse_transform(value);
    } else if (key.rfind("term", 0) == 0) {
      const auto w = words(value);
      if (w.size() < 2) fail(s.where(key), "expected '<coefficient> <transform>'");
      const std::size_t idx = parse_index(s.where(key), key.substr(4));
      terms[idx] = {parse_real(s.where(key), w[0]), parse_transform(value.substr(value.find(w[1])))};
    }
  }
  if (spec.transforms.size() != spec.q) {
    if (transforms.size() != spec.q) fail("[simulate]", "specify x1..x" + std::to_string(spec.q) + " for the new q");
    spec.transforms.assign(spec.q, Transform{});
  }
  for (auto& [idx, t] : transforms) {
    if (idx >= spec.q) fail("[simulate] x" + std::to_string(idx + 1), "beyond q = " + std::to_string(spec.q));
    spec.transforms[idx] = std::move(t);
  }
  if (!terms.empty()) {
    spec.outcome_terms.clear();
    for (auto& [idx, term] : terms) spec.outcome_terms.push_back(std::move(term));
  }

  if (auto q = s.get("quadrant")) {
    auto parsed = parse_quadrant(*q);
    if (!parsed) fail(s.where("quadrant"), "unknown quadrant '" + *q + "' (CC, CI, IC, II)");
    sim.quadrant = *parsed;
  }
  sim.n = s.integer("n", sim.n);
  sim.replicates = s.integer("replicates", sim.replicates);
  sim.seed = s.integer("seed", sim.seed);
  sim.level = s.number("level", sim.level);
  sim.jobs = static_cast<unsigned>(s.integer("jobs", sim.jobs));
  sim.true_mean_draws = s.integer("true_mean_draws", sim.true_mean_draws);
  if (sim.true_mean_draws < 2) fail(s.where("true_mean_draws"), "needs at least 2 draws");
  spec.validate();
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Transform parse_transform(const std::string& text) {
  const auto w = words(text);
  const std::string where = "transform '" + text + "'";
  if (w.empty()) fail(where, "empty");
  const std::string kind = lower(w[0]);
  auto expect = [&](std::size_t count) {
    if (w.size() != count) fail(where, "expected " + std::to_string(count - 1) + " arguments after '" + kind + "'");
  };
  if (kind == "affine") {
    expect(4);
    return Transform::affine(parse_index(where, w[1]), parse_real(where, w[2]), parse_real(where, w[3]));
  }
  if (kind == "exp") {
    expect(3);
    return Transform::exp(parse_index(where, w[1]), parse_real(where, w[2]));
  }
  if (kind == "ratio") {
    expect(4);
    return Transform::ratio(parse_index(where, w[1]), parse_index(where, w[2]), parse_real(where, w[3]));
  }
  if (kind == "power") {
    expect(5);
    std::vector<double> weights;
    for (const auto& item : split(w[1], ',')) weights.push_back(parse_real(where, item));
    return Transform::power(std::move(weights), parse_real(where, w[2]), parse_real(where, w[3]),
                            parse_real(where, w[4]));
  }
  fail(where, "unknown kind '" + kind + "' (affine, exp, ratio, power)");
}

std::string format_transform(const Transform& t) {
  // Shortest representation that parses back to the same double.
  const auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  std::string out;
  switch (t.kind) {
    case Transform::Kind::Affine:
      out = "affine " + std::to_string(t.j + 1) + ' ' + num(t.scale) + ' ' + num(t.shift);
      break;
    case Transform::Kind::Exp: out = "exp " + std::to_string(t.j + 1) + ' ' + num(t.scale); break;
    case Transform::Kind::Ratio:
      out = "ratio " + std::to_string(t.j + 1) + ' ' + std::to_string(t.k + 1) + ' ' + num(t.shift);
      break;
    case Transform::Kind::Power: {
      out = "power ";
      for (std::size_t i = 0; i < t.weights.size(); ++i) out += (i ? "," : "") + num(t.weights[i]);
      out += ' ' + num(t.scale) + ' ' + num(t.shift) + ' ' + num(t.exponent);
      break;
    }
  }
  return out;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.hash = fnv1a(text);

  // Allow '#' comments, whole-line or trailing after whitespace. Lines are
  // blanked rather than dropped so parser line numbers stay correct.
  std::string cleaned;
  {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      for (std::size_t i = 0; i < line.size(); ++i) {
        if ((line[i] == '#' || line[i] == ';') && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
          line.erase(i);
          break;
        }
      }
      cleaned += line;
      cleaned += '\n';
    }
  }
  ptree root;
  try {
    std::istringstream in(cleaned);
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed config: ") + e.message() + " (line " +
                                            std::to_string(e.line()) + ")");
  }

  static const std::set<std::string> kSections{"data", "outcome", "propensity", "estimators",
                                               "simulate", "output", "check"};
  for (const auto& [name, child] : root) {
    if (!kSections.count(name)) fail("config", "unknown section [" + name + "] or key outside a section");
  }

  if (auto node = root.get_child_optional("data")) {
    Section s("data", *node, {"path", "t", "y", "pi", "m"});
    DataSection d;
    auto path = s.get("path");
    if (!path || path->empty()) fail("[data]", "path is required");
    d.path = std::filesystem::path(*path);
    if (d.path.is_relative()) d.path = base_dir / d.path;
    d.roles.t = s.get("t").value_or("t");
    d.roles.y = s.get("y").value_or("y");
    d.pi = s.get("pi");
    d.m = s.get("m");
    cfg.data = std::move(d);
  }
  if (auto node = root.get_child_optional("outcome")) {
    Section s("outcome", *node, {"columns", "intercept", "mode"});
    OutcomeSection o;
    o.basis = read_basis(s);
    if (auto mode = s.get("mode")) o.mode = parse_mode(s.where("mode"), *mode);
    cfg.outcome = std::move(o);
  }
  if (auto node = root.get_child_optional("propensity")) {
    Section s("propensity", *node, {"columns", "intercept", "floor"});
    PropensitySection p;
    p.basis = read_basis(s);
    p.floor = s.optional_number("floor");
    if (p.floor && !(*p.floor > 0.0 && *p.floor < 0.5)) fail(s.where("floor"), "must lie in (0, 0.5)");
    cfg.propensity = std::move(p);
  }
  {
    static const ptree empty;
    auto node = root.get_child_optional("estimators");
    Section s("estimators", node ? *node : empty,
              {"names", "gamma", "delta", "lambda", "degree", "level", "small_pi_threshold"});
    EstimatorSection& e = cfg.estimators;
    e.options.delta = s.number("delta", e.options.delta);
    e.options.lambda = s.number("lambda", e.options.lambda);
    e.options.pi_cov_degree = static_cast<int>(s.integer("degree", static_cast<std::uint64_t>(e.options.pi_cov_degree)));
    e.level = s.number("level", e.level);
    e.small_pi_threshold = s.number("small_pi_threshold", e.small_pi_threshold);
    if (!(e.level > 0.0 && e.level < 1.0)) fail(s.where("level"), "must lie in (0, 1)");
    if (!(e.options.lambda >= 0.0 && e.options.lambda <= 1.0)) fail(s.where("lambda"), "must lie in [0, 1]");
    if (e.options.delta < 0.0) fail(s.where("delta"), "must be nonnegative");
    if (e.options.pi_cov_degree < 1) fail(s.where("degree"), "must be at least 1");
    const std::string gamma = lower(s.get("gamma").value_or("ols"));
    if (gamma != "ols" && gamma != "pop" && gamma != "nr" && gamma != "opt") {
      fail(s.where("gamma"), "unknown variant '" + gamma + "' (ols, pop, nr, opt)");
    }
    for (const auto& name : split(s.get("names").value_or("all"), ',')) {
      if (name == "all") {
        e.ids.insert(e.ids.end(), all_estimators().begin(), all_estimators().end());
      } else if (name == "dr") {
        e.ids.insert(e.ids.end(), doubly_robust_estimators().begin(), doubly_robust_estimators().end());
      } else if (name == "bc") {
        e.ids.push_back(*parse_estimator("bc_" + gamma));
      } else if (auto id = parse_estimator(name)) {
        e.ids.push_back(*id);
      } else {
        fail(s.where("names"), "unknown estimator '" + name + "'");
      }
    }
    if (e.ids.empty()) fail(s.where("names"), "no estimators listed");
  }
  if (auto node = root.get_child_optional("simulate")) {
    Section s("simulate", *node,
              {"preset", "q", "beta0", "beta", "sigma", "alpha0", "alpha", "x#", "term#", "quadrant", "n",
               "replicates", "seed", "level", "jobs", "true_mean_draws"});
    SimulateSection sim;
    read_simulate(s, sim);
    cfg.simulate = std::move(sim);
  }
  if (auto node = root.get_child_optional("output")) {
    Section s("output", *node, {"path", "format"});
    if (auto path = s.get("path"); path && !path->empty()) {
      std::filesystem::path p(*path);
      cfg.output.path = p.is_relative() ? base_dir / p : p;
    }
    const std::string format = lower(s.get("format").value_or("csv"));
    if (format == "csv") {
      cfg.output.format = TableFormat::Csv;
    } else if (format == "markdown" || format == "md") {
      cfg.output.format = TableFormat::Markdown;
    } else {
      fail(s.where("format"), "unknown format '" + format + "' (csv, markdown)");
    }
  }
  if (auto node = root.get_child_optional("check")) {
    Section s("check", *node, {"modes", "linearity_replicates"});
    if (auto modes = s.get("modes")) {
      for (const auto& m : split(*modes, ',')) cfg.check.modes.push_back(parse_mode(s.where("modes"), m));
    }
    cfg.check.linearity_replicates = s.integer("linearity_replicates", 0);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace aipw
