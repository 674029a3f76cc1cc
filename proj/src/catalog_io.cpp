#include "feedaudit/catalog_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "feedaudit/error.hpp"
#include "feedaudit/textio.hpp"

namespace feedaudit::catalog {

namespace {

using textio::format_exact;

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += format_exact(values[i]);
  }
  return out;
}

std::vector<double> parse_doubles(std::string_view text) {
  std::vector<double> out;
  if (text.empty()) return out;
  for (auto part : textio::split(text, ',')) out.push_back(textio::parse_double(part));
  return out;
}

std::vector<std::string> parse_words(std::string_view text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  for (auto part : textio::split(text, ',')) out.emplace_back(part);
  return out;
}

}  // namespace

void write_catalog(std::ostream& out, const Catalog& cat) {
  textio::write_magic(out, "catalog", kCatalogSchemaVersion);
  out << "seed\t" << cat.seed << '\n';
  out << "model\tmin_hashtags\t" << cat.min_hashtags << '\n';
  out << "model\tmax_hashtags\t" << cat.max_hashtags << '\n';
  out << "model\thashtag_zipf\t" << format_exact(cat.hashtag_zipf) << '\n';
  out << "model\tcommon_fraction\t" << format_exact(cat.common_fraction) << '\n';
  out << "model\tlocale_mixing\t" << format_exact(cat.locale_mixing) << '\n';
  out << "model\tlanguage_drift\t" << format_exact(cat.language_drift) << '\n';
  out << "model\tsecondary_topic_rate\t" << format_exact(cat.secondary_topic_rate) << '\n';
  for (const auto& lang : cat.languages) out << "language\t" << lang << '\n';
  for (std::size_t r = 0; r < cat.regions.size(); ++r)
    out << "region\t" << cat.regions[r] << '\t' << join_doubles(cat.region_languages[r]) << '\n';
  out << "common\t" << textio::join(cat.common_pool, ',') << '\n';
  for (const auto& t : cat.topics)
    out << "topic\t" << to_string(t.id) << '\t' << t.name << '\t' << format_exact(t.base_popularity)
        << '\t' << textio::join(t.hashtag_pool, ',') << '\n';
  for (const auto& c : cat.creators)
    out << "creator\t" << to_string(c.id) << '\t' << cat.regions[c.home_region] << '\t'
        << cat.languages[c.primary_language] << '\t' << format_exact(c.activity) << '\t'
        << join_doubles(c.topic_mixture) << '\n';
  for (std::size_t s = 0; s < cat.sound_weights.size(); ++s)
    out << "sound\t" << to_string(SoundId{static_cast<std::uint32_t>(s)}) << '\t'
        << format_exact(cat.sound_weights[s]) << '\n';
  for (const auto& p : cat.posts) {
    out << "post\t" << to_string(p.id) << '\t' << to_string(p.creator) << '\t' << to_string(p.sound)
        << '\t' << cat.languages[p.language] << '\t' << cat.regions[p.region] << '\t'
        << p.upload_tick << '\t' << format_exact(p.duration) << '\t' << p.counters.views << '\t'
        << p.counters.likes << '\t' << p.counters.shares << '\t' << p.counters.comments << '\t'
        << static_cast<int>(p.bucket) << '\t';
    for (std::size_t i = 0; i < p.hashtags.size(); ++i) {
      if (i) out << ',';
      out << cat.hashtag_text(p.hashtags[i]);
    }
    out << '\n';
  }
  out << "end\t" << cat.posts.size() << '\n';
}

Catalog read_catalog(std::istream& in, const std::string& source) {
  textio::expect_magic(in, "catalog", kCatalogSchemaVersion, source);
  Catalog cat;
  std::string line;
  std::size_t line_no = 1;
  bool indexed = false;
  bool ended = false;
  auto fail = [&](const std::string& what) {
    throw SchemaError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  auto ensure_indexed = [&] {
    if (!indexed) {
      cat.rebuild_indexes();
      indexed = true;
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (ended) fail("data after end record");
    auto f = textio::split(line, '\t');
    auto kind = f[0];
    auto need = [&](std::size_t n) {
      if (f.size() != n) fail("expected " + std::to_string(n) + " fields in " + std::string(kind));
    };
    try {
      if (kind == "seed") {
        need(2);
        cat.seed = textio::parse_uint(f[1]);
      } else if (kind == "model") {
        need(3);
        auto key = f[1];
        if (key == "min_hashtags") cat.min_hashtags = textio::parse_uint(f[2]);
        else if (key == "max_hashtags") cat.max_hashtags = textio::parse_uint(f[2]);
        else if (key == "hashtag_zipf") cat.hashtag_zipf = textio::parse_double(f[2]);
        else if (key == "common_fraction") cat.common_fraction = textio::parse_double(f[2]);
        else if (key == "locale_mixing") cat.locale_mixing = textio::parse_double(f[2]);
        else if (key == "language_drift") cat.language_drift = textio::parse_double(f[2]);
        else if (key == "secondary_topic_rate") cat.secondary_topic_rate = textio::parse_double(f[2]);
        else fail("unknown model key " + std::string(key));
      } else if (kind == "language") {
        need(2);
        cat.languages.emplace_back(f[1]);
      } else if (kind == "region") {
        need(3);
        cat.regions.emplace_back(f[1]);
        auto row = parse_doubles(f[2]);
        if (row.size() != cat.languages.size()) fail("region language row has wrong width");
        cat.region_languages.push_back(std::move(row));
      } else if (kind == "common") {
        need(2);
        cat.common_pool = parse_words(f[1]);
      } else if (kind == "topic") {
        need(5);
        Topic t{parse_topic_id(f[1]), std::string(f[2]), parse_words(f[4]), textio::parse_double(f[3])};
        if (t.id.value != cat.topics.size()) fail("topic ids out of order");
        cat.topics.push_back(std::move(t));
      } else if (kind == "creator") {
        need(6);
        Creator c;
        c.id = parse_creator_id(f[1]);
        if (c.id.value != cat.creators.size()) fail("creator ids out of order");
        auto region = cat.region_index(f[2]);
        auto lang = cat.language_index(f[3]);
        if (!region || !lang) fail("creator locale unknown");
        c.home_region = *region;
        c.primary_language = *lang;
        c.activity = textio::parse_double(f[4]);
        c.topic_mixture = parse_doubles(f[5]);
        cat.creators.push_back(std::move(c));
      } else if (kind == "sound") {
        need(3);
        if (parse_sound_id(f[1]).value != cat.sound_weights.size()) fail("sound ids out of order");
        cat.sound_weights.push_back(textio::parse_double(f[2]));
      } else if (kind == "post") {
        need(14);
        ensure_indexed();
        Post p;
        p.id = parse_post_id(f[1]);
        if (p.id.value != cat.posts.size()) fail("post ids out of order");
        p.creator = parse_creator_id(f[2]);
        p.sound = parse_sound_id(f[3]);
        auto lang = cat.language_index(f[4]);
        auto region = cat.region_index(f[5]);
        if (!region || !lang) fail("post locale unknown");
        p.language = *lang;
        p.region = *region;
        p.upload_tick = textio::parse_int(f[6]);
        p.duration = textio::parse_double(f[7]);
        p.counters = {textio::parse_int(f[8]), textio::parse_int(f[9]), textio::parse_int(f[10]),
                      textio::parse_int(f[11])};
        auto bucket = textio::parse_int(f[12]);
        if (bucket < 0 || bucket > 2) fail("bucket out of range");
        p.bucket = static_cast<Bucket>(bucket);
        for (const auto& tag : parse_words(f[13])) {
          auto id = cat.find_hashtag(tag);
          if (!id) fail("unknown hashtag " + tag);
          p.hashtags.push_back(*id);
        }
        if (p.creator.value >= cat.creators.size() || p.sound.value >= cat.sound_weights.size())
          fail("post references unknown creator or sound");
        cat.posts.push_back(std::move(p));
        cat.index_post(cat.posts.back());
      } else if (kind == "end") {
        need(2);
        if (textio::parse_uint(f[1]) != cat.posts.size()) fail("post count mismatch");
        ended = true;
      } else {
        fail("unknown record kind " + std::string(kind));
      }
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  if (!ended) throw SchemaError(source + ": truncated catalog (no end record)");
  ensure_indexed();
  try {
    cat.check_integrity();
  } catch (const DataError& e) {
    throw SchemaError(source + ": " + e.what());
  }
  return cat;
}

void save_catalog(const Catalog& catalog, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  write_catalog(out, catalog);
  if (!out) throw DataError("write failed: " + path);
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open catalog " + path);
  return read_catalog(in, path);
}

}  // namespace feedaudit::catalog
