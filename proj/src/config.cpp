#include "nusim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "nusim/errors.hpp"

namespace nusim {

namespace {

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void known_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> keys) {
  for (const auto& kv : node) {
    const auto key = kv.first.Scalar();
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
      throw ConfigError(at(path, key), "unknown field");
  }
}

void expect_map(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) throw ConfigError(path, "expected a mapping");
}

void expect_sequence(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ConfigError(path, "expected a list");
}

std::string text(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, "expected a string");
  return node.Scalar();
}

double number(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, "expected a number");
  const std::string& s = node.Scalar();
  if (s == ".inf" || s == "inf") return kInfinity;
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(path, "expected a number, got '" + s + "'");
  return v;
}

bool boolean(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, "expected true or false");
  const std::string& s = node.Scalar();
  if (s == "true" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(path, "expected true or false, got '" + s + "'");
}

std::vector<std::string> text_list(const YAML::Node& node, const std::string& path) {
  expect_sequence(node, path);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(text(node[i], at(path, i)));
  return out;
}

ComponentSpec read_component(const YAML::Node& node, const std::string& path) {
  expect_map(node, path);
  known_keys(node, path, {"id", "initial_weight", "states", "realizes_as"});
  ComponentSpec c;
  if (!node["id"]) throw ConfigError(at(path, "id"), "missing");
  c.id = text(node["id"], at(path, "id"));
  if (node["initial_weight"]) c.initial_weight = number(node["initial_weight"], at(path, "initial_weight"));
  if (node["realizes_as"]) c.realizes_as = text(node["realizes_as"], at(path, "realizes_as"));
  if (const auto states = node["states"]) {
    const std::string spath = at(path, "states");
    expect_map(states, spath);
    for (const auto& kv : states) {
      const std::string object = kv.first.Scalar();
      const std::string opath = at(spath, object);
      StateSpec st{{object}, "", false};
      if (kv.second.IsMap()) {
        known_keys(kv.second, opath, {"label", "ready"});
        if (!kv.second["label"]) throw ConfigError(at(opath, "label"), "missing");
        st.label = text(kv.second["label"], at(opath, "label"));
        if (kv.second["ready"]) st.ready = boolean(kv.second["ready"], at(opath, "ready"));
      } else {
        st.label = text(kv.second, opath);
      }
      c.states.push_back(std::move(st));
    }
  }
  return c;
}

EdgeSpec read_edge(const YAML::Node& node, const std::string& path) {
  expect_map(node, path);
  known_keys(node, path, {"id", "source", "target", "anchor", "creates_ready", "pieces", "window", "total"});
  EdgeSpec e;
  for (const char* key : {"id", "source", "target"})
    if (!node[key]) throw ConfigError(at(path, key), "missing");
  e.id = text(node["id"], at(path, "id"));
  e.source = text(node["source"], at(path, "source"));
  e.target = text(node["target"], at(path, "target"));
  if (node["anchor"]) {
    const auto a = text(node["anchor"], at(path, "anchor"));
    if (a == "absolute") e.anchor = Anchor::Absolute;
    else if (a == "source") e.anchor = Anchor::SourceEpoch;
    else throw ConfigError(at(path, "anchor"), "expected 'absolute' or 'source', got '" + a + "'");
  }
  if (node["creates_ready"]) e.creates_ready = boolean(node["creates_ready"], at(path, "creates_ready"));

  const bool has_pieces = static_cast<bool>(node["pieces"]);
  const bool has_window = node["window"] || node["total"];
  if (has_pieces == has_window)
    throw ConfigError(path, "give either 'pieces' or 'window' with 'total' in edge '" + e.id + "'");
  if (has_pieces) {
    const std::string ppath = at(path, "pieces");
    expect_sequence(node["pieces"], ppath);
    std::vector<RatePiece> pieces;
    for (std::size_t i = 0; i < node["pieces"].size(); ++i) {
      const auto p = node["pieces"][i];
      const std::string ip = at(ppath, i);
      if (!p.IsSequence() || p.size() != 3) throw ConfigError(ip, "expected [begin, end, rate]");
      pieces.push_back({number(p[0], ip + ".begin"), number(p[1], ip + ".end"), number(p[2], ip + ".rate")});
    }
    // Keep the written order; validation reports inversions and overlaps.
    e.profile = RateProfile(std::move(pieces));
  } else {
    if (!node["window"] || !node["total"]) throw ConfigError(path, "'window' needs 'total' and vice versa");
    const auto w = node["window"];
    const std::string wp = at(path, "window");
    if (!w.IsSequence() || w.size() != 2) throw ConfigError(wp, "expected [begin, end]");
    const double b = number(w[0], wp + "[0]");
    const double en = number(w[1], wp + "[1]");
    const double total = number(node["total"], at(path, "total"));
    if (!(b < en)) throw ConfigError(wp, "window inversion (begin >= end) in edge '" + e.id + "'");
    e.profile = RateProfile::uniform(b, en, total);
  }
  return e;
}

Classifier read_classifier(const YAML::Node& node, const std::string& path) {
  expect_map(node, path);
  known_keys(node, path, {"mode", "rules", "object"});
  Classifier cl;
  if (node["mode"]) {
    const auto m = text(node["mode"], at(path, "mode"));
    if (m == "rules") cl.mode = ClassifierMode::Rules;
    else if (m == "sequence") cl.mode = ClassifierMode::Sequence;
    else if (m == "readings") cl.mode = ClassifierMode::Readings;
    else throw ConfigError(at(path, "mode"), "expected rules, sequence or readings, got '" + m + "'");
  }
  if (node["object"]) cl.object = ObjectId{text(node["object"], at(path, "object"))};
  if (const auto rules = node["rules"]) {
    const std::string rp = at(path, "rules");
    expect_sequence(rules, rp);
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto r = rules[i];
      const std::string ip = at(rp, i);
      expect_map(r, ip);
      known_keys(r, ip, {"label", "sequence", "final"});
      ClassifierRule rule;
      if (!r["label"]) throw ConfigError(at(ip, "label"), "missing");
      rule.label = text(r["label"], at(ip, "label"));
      if (r["sequence"]) rule.sequence = text_list(r["sequence"], at(ip, "sequence"));
      if (r["final"]) rule.final_component = text(r["final"], at(ip, "final"));
      cl.rules.push_back(std::move(rule));
    }
  }
  return cl;
}

Scenario read_scenario(const YAML::Node& root) {
  expect_map(root, "");
  known_keys(root, "", {"name", "description", "horizon", "blocking", "objects", "components", "edges",
                        "classifier", "expected", "annotations"});
  Scenario sc;
  if (root["name"]) sc.name = text(root["name"], "name");
  if (root["description"]) sc.description = text(root["description"], "description");
  if (root["horizon"]) {
    const double h = number(root["horizon"], "horizon");
    if (std::isfinite(h)) sc.horizon = h;
  }
  if (root["blocking"]) sc.blocking = boolean(root["blocking"], "blocking");
  if (root["objects"])
    for (auto& o : text_list(root["objects"], "objects")) sc.objects.push_back({std::move(o)});
  if (const auto comps = root["components"]) {
    expect_sequence(comps, "components");
    for (std::size_t i = 0; i < comps.size(); ++i) sc.components.push_back(read_component(comps[i], at("components", i)));
  }
  if (const auto edges = root["edges"]) {
    expect_sequence(edges, "edges");
    for (std::size_t i = 0; i < edges.size(); ++i) sc.edges.push_back(read_edge(edges[i], at("edges", i)));
  }
  if (root["classifier"]) sc.classifier = read_classifier(root["classifier"], "classifier");
  if (const auto ex = root["expected"]) {
    expect_map(ex, "expected");
    for (const auto& kv : ex)
      sc.expected.push_back({kv.first.Scalar(), number(kv.second, at("expected", kv.first.Scalar()))});
  }
  if (const auto an = root["annotations"]) {
    expect_map(an, "annotations");
    for (const auto& kv : an)
      sc.annotations.push_back({kv.first.Scalar(), number(kv.second, at("annotations", kv.first.Scalar()))});
  }
  validate(sc);
  return sc;
}

// Plain scalars that YAML would read as something other than a string.
bool needs_quotes(const std::string& s) {
  if (s.empty()) return true;
  static const std::set<std::string> reserved = {"true", "false", "yes", "no", "on", "off", "null", "~"};
  if (reserved.contains(s)) return true;
  double d;
  if (std::from_chars(s.data(), s.data() + s.size(), d).ptr == s.data() + s.size()) return true;
  return false;
}

struct Writer {
  YAML::Emitter out;

  void str(const std::string& s) {
    if (needs_quotes(s)) out << YAML::DoubleQuoted << s;
    else out << s;
  }
  void num(double x) { out << format_double(x); }
};

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? ".inf" : "-.inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, ptr);
}

Scenario parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  if (!root || root.IsNull()) throw ParseError(1, 1, "empty document");
  if (!root.IsMap()) {
    const auto m = root.Mark();
    throw ParseError(m.line + 1, m.column + 1, "top level must be a mapping");
  }
  try {
    return read_scenario(root);
  } catch (const YAML::Exception& e) {
    throw ParseError(e.mark.line + 1, e.mark.column + 1, e.msg);
  }
}

Scenario load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("file", "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string export_config(const Scenario& sc) {
  Writer w;
  auto& o = w.out;
  o << YAML::BeginMap;
  o << YAML::Key << "name" << YAML::Value;
  w.str(sc.name);
  if (!sc.description.empty()) {
    o << YAML::Key << "description" << YAML::Value;
    w.str(sc.description);
  }
  if (sc.horizon) {
    o << YAML::Key << "horizon" << YAML::Value;
    w.num(*sc.horizon);
  }
  o << YAML::Key << "blocking" << YAML::Value << (sc.blocking ? "true" : "false");

  o << YAML::Key << "objects" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& obj : sc.objects) w.str(obj.name);
  o << YAML::EndSeq;

  o << YAML::Key << "components" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : sc.components) {
    o << YAML::BeginMap << YAML::Key << "id" << YAML::Value;
    w.str(c.id);
    if (c.initial_weight) {
      o << YAML::Key << "initial_weight" << YAML::Value;
      w.num(*c.initial_weight);
    }
    if (c.realizes_as) {
      o << YAML::Key << "realizes_as" << YAML::Value;
      w.str(*c.realizes_as);
    }
    o << YAML::Key << "states" << YAML::Value << YAML::BeginMap;
    for (const auto& st : c.states) {
      o << YAML::Key;
      w.str(st.object.name);
      o << YAML::Value;
      if (st.ready) {
        o << YAML::Flow << YAML::BeginMap << YAML::Key << "label" << YAML::Value;
        w.str(st.label);
        o << YAML::Key << "ready" << YAML::Value << "true" << YAML::EndMap;
      } else {
        w.str(st.label);
      }
    }
    o << YAML::EndMap << YAML::EndMap;
  }
  o << YAML::EndSeq;

  o << YAML::Key << "edges" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : sc.edges) {
    o << YAML::BeginMap;
    o << YAML::Key << "id" << YAML::Value;
    w.str(e.id);
    o << YAML::Key << "source" << YAML::Value;
    w.str(e.source);
    o << YAML::Key << "target" << YAML::Value;
    w.str(e.target);
    if (e.anchor == Anchor::SourceEpoch) o << YAML::Key << "anchor" << YAML::Value << "source";
    if (!e.creates_ready) o << YAML::Key << "creates_ready" << YAML::Value << "false";
    o << YAML::Key << "pieces" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : e.profile.pieces()) {
      o << YAML::Flow << YAML::BeginSeq;
      w.num(p.begin);
      w.num(p.end);
      w.num(p.rate);
      o << YAML::EndSeq;
    }
    o << YAML::EndSeq << YAML::EndMap;
  }
  o << YAML::EndSeq;

  const auto& cl = sc.classifier;
  o << YAML::Key << "classifier" << YAML::Value << YAML::BeginMap;
  o << YAML::Key << "mode" << YAML::Value
    << (cl.mode == ClassifierMode::Rules ? "rules" : cl.mode == ClassifierMode::Sequence ? "sequence" : "readings");
  if (cl.object) {
    o << YAML::Key << "object" << YAML::Value;
    w.str(cl.object->name);
  }
  if (!cl.rules.empty()) {
    o << YAML::Key << "rules" << YAML::Value << YAML::BeginSeq;
    for (const auto& r : cl.rules) {
      o << YAML::BeginMap << YAML::Key << "label" << YAML::Value;
      w.str(r.label);
      if (r.sequence) {
        o << YAML::Key << "sequence" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (const auto& id : *r.sequence) w.str(id);
        o << YAML::EndSeq;
      }
      if (r.final_component) {
        o << YAML::Key << "final" << YAML::Value;
        w.str(*r.final_component);
      }
      o << YAML::EndMap;
    }
    o << YAML::EndSeq;
  }
  o << YAML::EndMap;

  if (!sc.expected.empty()) {
    o << YAML::Key << "expected" << YAML::Value << YAML::BeginMap;
    for (const auto& e : sc.expected) {
      o << YAML::Key;
      w.str(e.label);
      o << YAML::Value;
      w.num(e.probability);
    }
    o << YAML::EndMap;
  }
  if (!sc.annotations.empty()) {
    o << YAML::Key << "annotations" << YAML::Value << YAML::BeginMap;
    for (const auto& a : sc.annotations) {
      o << YAML::Key;
      w.str(a.key);
      o << YAML::Value;
      w.num(a.value);
    }
    o << YAML::EndMap;
  }
  o << YAML::EndMap;
  return std::string(o.c_str()) + "\n";
}

}  // namespace nusim
