#include "feedaudit/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "feedaudit/catalog.hpp"
#include "feedaudit/error.hpp"
#include "feedaudit/textio.hpp"

namespace feedaudit::puppet {

namespace {

constexpr int kScenarioVersion = 1;

bool is_lowercase_tag(const std::string& tag) {
  return !tag.empty() && std::none_of(tag.begin(), tag.end(), [](unsigned char c) {
    return std::isupper(c) || std::isspace(c) || c == '#';
  });
}

}  // namespace

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::control: return "control";
    case ActionKind::like: return "like";
    case ActionKind::follow: return "follow";
    case ActionKind::vvr: return "vvr";
  }
  return "?";
}

const char* to_string(Selection selection) {
  switch (selection) {
    case Selection::none: return "none";
    case Selection::random: return "random";
    case Selection::persona: return "persona";
    case Selection::creator: return "creator";
    case Selection::sound: return "sound";
  }
  return "?";
}

ActionKind parse_action_kind(std::string_view text) {
  for (auto k : {ActionKind::control, ActionKind::like, ActionKind::follow, ActionKind::vvr})
    if (text == to_string(k)) return k;
  throw ConfigError("unknown action kind '" + std::string(text) + "'");
}

Selection parse_selection(std::string_view text) {
  for (auto s : {Selection::none, Selection::random, Selection::persona, Selection::creator,
                 Selection::sound})
    if (text == to_string(s)) return s;
  throw ConfigError("unknown selection policy '" + std::string(text) + "'");
}

bool Action::acts_in(std::size_t batch) const {
  return batches.empty() || std::find(batches.begin(), batches.end(), batch) != batches.end();
}

void Scenario::validate() const {
  auto fail = [this](const std::string& what) {
    throw ConfigError("scenario " + std::to_string(id) + ": " + what);
  };
  if (pairs.empty()) fail("no user pairs");
  if (batches_per_run != 3 && batches_per_run != 5) fail("batches_per_run must be 3 or 5");
  if (runs < 1) fail("runs must be positive");
  if (tick_scale < 0) fail("tick_scale must be >= 0");
  if (!(dwell_baseline > 0)) fail("dwell baseline must be positive");
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    if (p.active_user.empty() || p.control_user.empty()) fail("pair with empty user id");
    if (!seen.insert(p.active_user).second || !seen.insert(p.control_user).second)
      fail("user ids must be unique across pairs");
    if (p.region.empty() || p.language.empty()) fail("pair without region or language");
  }
  for (auto b : action.batches)
    if (b >= batches_per_run) fail("action batch index beyond batches_per_run");

  switch (action.kind) {
    case ActionKind::control:
      if (action.selection != Selection::none) fail("control scenarios take no selection policy");
      return;
    case ActionKind::follow:
      if (action.selection != Selection::random) fail("follow scenarios select at random");
      break;
    case ActionKind::vvr: {
      bool allowed = std::any_of(std::begin(kVvrFractions), std::end(kVvrFractions),
                                 [this](double f) { return f == action.vvr; });
      if (!allowed) fail("vvr fraction must be one of 0.25, 0.5, 0.75, 1, 2, 4");
      break;
    }
    case ActionKind::like:
      break;
  }
  switch (action.selection) {
    case Selection::none:
      fail("active scenarios need a selection policy");
      break;
    case Selection::random:
      if (action.kind != ActionKind::follow && action.count == 0) fail("random selection needs a count");
      break;
    case Selection::persona: {
      if (action.persona.empty()) fail("persona selection needs hashtags");
      std::set<std::string> unique;
      for (const auto& tag : action.persona) {
        if (!is_lowercase_tag(tag)) fail("persona hashtag '" + tag + "' is not a lowercase tag");
        if (!unique.insert(tag).second) fail("duplicate persona hashtag '" + tag + "'");
      }
      break;
    }
    case Selection::creator:
      if (action.creators.empty()) fail("creator selection needs creator ids");
      break;
    case Selection::sound:
      if (action.sounds.empty()) fail("sound selection needs sound ids");
      break;
  }
}

std::vector<std::string> Scenario::users() const {
  std::vector<std::string> out;
  for (const auto& p : pairs) {
    out.push_back(p.active_user);
    out.push_back(p.control_user);
  }
  return out;
}

std::string family(const Scenario& s) {
  switch (s.action.kind) {
    case ActionKind::control: {
      for (const auto& p : s.pairs)
        if (p.switch_region || p.region != s.pairs.front().region ||
            p.language != s.pairs.front().language)
          return "locale";
      return "control";
    }
    case ActionKind::like: return "like";
    case ActionKind::follow: return "follow";
    case ActionKind::vvr:
      return s.action.selection == Selection::persona ? "vvr-persona" : "vvr-random";
  }
  return "?";
}

std::string dump_scenario(const Scenario& s) {
  using textio::format_exact;
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "id" << YAML::Value << s.id;
  out << YAML::Key << "description" << YAML::Value << YAML::DoubleQuoted << s.description;
  out << YAML::Key << "batches_per_run" << YAML::Value << s.batches_per_run;
  out << YAML::Key << "runs" << YAML::Value << s.runs;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "tick_scale" << YAML::Value << s.tick_scale;
  out << YAML::Key << "dwell_baseline" << YAML::Value << format_exact(s.dwell_baseline);
  out << YAML::Key << "collect_first_posts" << YAML::Value << s.collect_first_posts;
  out << YAML::Key << "reuse_cookies" << YAML::Value << s.reuse_cookies;
  out << YAML::Key << "excluded" << YAML::Value << s.excluded;
  if (s.permute_order) out << YAML::Key << "permute_order" << YAML::Value << true;

  out << YAML::Key << "pairs" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : s.pairs) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "active" << YAML::Value << p.active_user;
    out << YAML::Key << "control" << YAML::Value << p.control_user;
    out << YAML::Key << "region" << YAML::Value << p.region;
    out << YAML::Key << "language" << YAML::Value << p.language;
    if (p.switch_region) out << YAML::Key << "switch_region" << YAML::Value << *p.switch_region;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  const Action& a = s.action;
  out << YAML::Key << "action" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << to_string(a.kind);
  out << YAML::Key << "selection" << YAML::Value << to_string(a.selection);
  if (a.count > 0) out << YAML::Key << "count" << YAML::Value << a.count;
  if (!a.batches.empty()) out << YAML::Key << "batches" << YAML::Value << YAML::Flow << a.batches;
  if (a.kind == ActionKind::vvr) out << YAML::Key << "vvr" << YAML::Value << format_exact(a.vvr);
  if (!a.persona.empty()) out << YAML::Key << "persona" << YAML::Value << YAML::Flow << a.persona;
  if (!a.creators.empty()) {
    std::vector<std::string> ids;
    for (auto c : a.creators) ids.push_back(catalog::to_string(catalog::CreatorId{c}));
    out << YAML::Key << "creators" << YAML::Value << YAML::Flow << ids;
  }
  if (!a.sounds.empty()) {
    std::vector<std::string> ids;
    for (auto c : a.sounds) ids.push_back(catalog::to_string(catalog::SoundId{c}));
    out << YAML::Key << "sounds" << YAML::Value << YAML::Flow << ids;
  }
  out << YAML::EndMap;
  out << YAML::EndMap;

  std::ostringstream text;
  textio::write_magic(text, "scenario", kScenarioVersion);
  text << out.c_str() << '\n';
  return text.str();
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  textio::expect_magic(in, "scenario", kScenarioVersion, source);
  Scenario s;
  try {
    YAML::Node root = YAML::Load(text);
    if (!root.IsMap()) throw SchemaError(source + ": top level must be a mapping");
    auto read = [](const YAML::Node& node, const char* key, auto& field) {
      if (node[key]) field = node[key].as<std::decay_t<decltype(field)>>();
    };
    read(root, "id", s.id);
    read(root, "description", s.description);
    read(root, "batches_per_run", s.batches_per_run);
    read(root, "runs", s.runs);
    read(root, "seed", s.seed);
    read(root, "tick_scale", s.tick_scale);
    read(root, "dwell_baseline", s.dwell_baseline);
    read(root, "collect_first_posts", s.collect_first_posts);
    read(root, "reuse_cookies", s.reuse_cookies);
    read(root, "excluded", s.excluded);
    read(root, "permute_order", s.permute_order);
    for (const auto& node : root["pairs"]) {
      Pair p;
      read(node, "active", p.active_user);
      read(node, "control", p.control_user);
      read(node, "region", p.region);
      read(node, "language", p.language);
      if (node["switch_region"]) p.switch_region = node["switch_region"].as<std::string>();
      s.pairs.push_back(std::move(p));
    }
    if (auto a = root["action"]) {
      if (a["kind"]) s.action.kind = parse_action_kind(a["kind"].as<std::string>());
      if (a["selection"]) s.action.selection = parse_selection(a["selection"].as<std::string>());
      read(a, "count", s.action.count);
      read(a, "batches", s.action.batches);
      read(a, "vvr", s.action.vvr);
      read(a, "persona", s.action.persona);
      if (a["creators"])
        for (const auto& c : a["creators"])
          s.action.creators.push_back(catalog::parse_creator_id(c.as<std::string>()).value);
      if (a["sounds"])
        for (const auto& c : a["sounds"])
          s.action.sounds.push_back(catalog::parse_sound_id(c.as<std::string>()).value);
    }
  } catch (const YAML::Exception& e) {
    throw SchemaError(source + ": " + e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  return parse_scenario(textio::read_file(path), path);
}

}  // namespace feedaudit::puppet
