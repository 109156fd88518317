#include "visprompt/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "visprompt/error.hpp"

namespace visprompt::io {
namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  fail(ErrorCode::Validation, "field " + (path.empty() ? std::string("/") : path) + ": " + what);
}

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) bad_field(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) bad_field(child(path, key), "missing");
  return *it;
}

const json* optional_field(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) bad_field(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad_field(path, "expected a finite number");
  return d;
}

std::int64_t as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) bad_field(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::size_t as_count(const json& v, const std::string& path) {
  const std::int64_t n = as_int(v, path);
  if (n < 0) bad_field(path, "expected a non-negative integer");
  return static_cast<std::size_t>(n);
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    bad_field(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) bad_field(path, "expected a string");
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) bad_field(path, "expected an array");
  return v;
}

json embedding_json(const Embedding& e) { return json(e.raw()); }

Embedding read_embedding(const json& v, std::size_t dim, const std::string& path) {
  as_array(v, path);
  if (v.size() != dim) {
    fail(ErrorCode::DimensionMismatch, "field " + path + ": expected " + std::to_string(dim) +
                                           " numbers, got " + std::to_string(v.size()));
  }
  std::vector<double> values(dim);
  for (std::size_t i = 0; i < dim; ++i) values[i] = as_double(v[i], child(path, i));
  return Embedding(std::move(values));
}

json box_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

Box read_box(const json& v, const std::string& path) {
  as_array(v, path);
  if (v.size() != 4) bad_field(path, "expected [x1, y1, x2, y2]");
  Box b{as_double(v[0], child(path, 0)), as_double(v[1], child(path, 1)),
        as_double(v[2], child(path, 2)), as_double(v[3], child(path, 3))};
  if (!b.valid()) bad_field(path, "degenerate box (need x1 < x2 and y1 < y2)");
  return b;
}

json header(const char* format) {
  json doc = json::object();
  doc["format"] = format;
  doc["version"] = kFormatVersion;
  return doc;
}

void check_header(const json& doc, const char* format) {
  if (!doc.is_object()) bad_field("", "expected a JSON object at top level");
  const std::string found = as_string(require(doc, "format", ""), "/format");
  if (found != format) {
    bad_field("/format", "expected '" + std::string(format) + "', got '" + found + "'");
  }
  const std::int64_t version = as_int(require(doc, "version", ""), "/version");
  if (version != kFormatVersion) {
    fail(ErrorCode::VersionMismatch, "field /version: file has format version " +
                                         std::to_string(version) + ", this build reads " +
                                         std::to_string(kFormatVersion));
  }
}

std::size_t read_dim(const json& doc) {
  const std::size_t dim = as_count(require(doc, "dim", ""), "/dim");
  if (dim == 0) bad_field("/dim", "dimension must be at least 1");
  return dim;
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& path) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) bad_field(child(path, key), "unknown key");
  }
}

}  // namespace

json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    fail(ErrorCode::Parse, source + ": parse error at line " + std::to_string(line) + ", column " +
                               std::to_string(column) + " (byte offset " + std::to_string(e.byte) +
                               "): " + e.what());
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path.string());
}

void write_json(const json& doc, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

// --- vocabulary ---

json to_json(const Vocabulary& vocab) {
  json doc = header(kVocabularyFormat);
  doc["dim"] = vocab.dim();
  json entries = json::array();
  for (const auto& e : vocab.entries) {
    entries.push_back({{"phrase", e.phrase}, {"embedding", embedding_json(e.embedding)}});
  }
  doc["entries"] = std::move(entries);
  return doc;
}

Vocabulary vocabulary_from_json(const json& doc) {
  check_header(doc, kVocabularyFormat);
  const std::size_t dim = read_dim(doc);
  Vocabulary vocab;
  const json& entries = as_array(require(doc, "entries", ""), "/entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string path = child("/entries", i);
    vocab.entries.push_back({as_string(require(entries[i], "phrase", path), child(path, "phrase")),
                             read_embedding(require(entries[i], "embedding", path), dim,
                                            child(path, "embedding"))});
  }
  vocab.validate();
  return vocab;
}

// --- dataset ---

json to_json(const Dataset& dataset) {
  json doc = header(kDatasetFormat);
  doc["dim"] = dataset.dim;
  json cats = json::array();
  for (const auto& c : dataset.categories) cats.push_back({{"id", c.id}, {"name", c.name}});
  doc["categories"] = std::move(cats);
  json images = json::array();
  for (const auto& img : dataset.images) {
    json proposals = json::array();
    for (const auto& p : img.proposals) {
      proposals.push_back({{"feature", embedding_json(p.feature)},
                           {"box", box_json(p.box)},
                           {"label", p.label ? json(*p.label) : json(nullptr)}});
    }
    json instances = json::array();
    for (const auto& inst : img.instances) {
      json context = json::array();
      for (const auto& c : inst.context) context.push_back(embedding_json(c));
      instances.push_back(
          {{"category", inst.category}, {"box", box_json(inst.box)}, {"context", std::move(context)}});
    }
    images.push_back(
        {{"id", img.id}, {"proposals", std::move(proposals)}, {"instances", std::move(instances)}});
  }
  doc["images"] = std::move(images);
  return doc;
}

Dataset dataset_from_json(const json& doc) {
  check_header(doc, kDatasetFormat);
  Dataset ds;
  ds.dim = read_dim(doc);
  const json& cats = as_array(require(doc, "categories", ""), "/categories");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string path = child("/categories", i);
    ds.categories.push_back({static_cast<CategoryId>(as_int(require(cats[i], "id", path), child(path, "id"))),
                             as_string(require(cats[i], "name", path), child(path, "name"))});
  }
  const json& images = as_array(require(doc, "images", ""), "/images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ipath = child("/images", i);
    const json& img_json = images[i];
    ImageSample img;
    img.id = static_cast<ImageId>(as_int(require(img_json, "id", ipath), child(ipath, "id")));
    const std::string ppath = child(ipath, "proposals");
    const json& props = as_array(require(img_json, "proposals", ipath), ppath);
    for (std::size_t p = 0; p < props.size(); ++p) {
      const std::string path = child(ppath, p);
      Proposal prop;
      prop.feature = read_embedding(require(props[p], "feature", path), ds.dim, child(path, "feature"));
      prop.box = read_box(require(props[p], "box", path), child(path, "box"));
      const json& label = require(props[p], "label", path);
      if (!label.is_null()) {
        prop.label = static_cast<CategoryId>(as_int(label, child(path, "label")));
      }
      img.proposals.push_back(std::move(prop));
    }
    const std::string gpath = child(ipath, "instances");
    const json& insts = as_array(require(img_json, "instances", ipath), gpath);
    for (std::size_t g = 0; g < insts.size(); ++g) {
      const std::string path = child(gpath, g);
      GtInstance inst;
      inst.category = static_cast<CategoryId>(as_int(require(insts[g], "category", path), child(path, "category")));
      inst.box = read_box(require(insts[g], "box", path), child(path, "box"));
      const std::string cpath = child(path, "context");
      const json& ctx = as_array(require(insts[g], "context", path), cpath);
      for (std::size_t k = 0; k < ctx.size(); ++k) {
        inst.context.push_back(read_embedding(ctx[k], ds.dim, child(cpath, k)));
      }
      img.instances.push_back(std::move(inst));
    }
    ds.images.push_back(std::move(img));
  }
  ds.validate();
  return ds;
}

// --- dictionaries ---

json dictionaries_to_json(const std::vector<SimilarityDictionary>& dicts, std::size_t dim) {
  json doc = header(kDictionaryFormat);
  doc["dim"] = dim;
  json arr = json::array();
  for (const auto& d : dicts) {
    json entries = json::array();
    for (const auto& e : d.entries) {
      entries.push_back({{"phrase", e.phrase},
                         {"query_similarity", e.query_similarity},
                         {"embedding", embedding_json(e.embedding)}});
    }
    arr.push_back({{"category", d.category_id},
                   {"top_k", d.top_k},
                   {"nms_threshold", d.nms_threshold},
                   {"similarity", to_string(d.mode)},
                   {"entries", std::move(entries)}});
  }
  doc["dictionaries"] = std::move(arr);
  return doc;
}

std::vector<SimilarityDictionary> dictionaries_from_json(const json& doc, std::size_t* dim_out) {
  check_header(doc, kDictionaryFormat);
  const std::size_t dim = read_dim(doc);
  if (dim_out != nullptr) *dim_out = dim;
  std::vector<SimilarityDictionary> out;
  std::set<CategoryId> seen;
  const json& arr = as_array(require(doc, "dictionaries", ""), "/dictionaries");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = child("/dictionaries", i);
    SimilarityDictionary d;
    d.category_id = static_cast<CategoryId>(as_int(require(arr[i], "category", path), child(path, "category")));
    if (!seen.insert(d.category_id).second) bad_field(child(path, "category"), "duplicate category");
    d.top_k = as_count(require(arr[i], "top_k", path), child(path, "top_k"));
    d.nms_threshold = as_double(require(arr[i], "nms_threshold", path), child(path, "nms_threshold"));
    d.mode = similarity_mode_from_string(
        as_string(require(arr[i], "similarity", path), child(path, "similarity")));
    const std::string epath = child(path, "entries");
    const json& entries = as_array(require(arr[i], "entries", path), epath);
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const std::string p = child(epath, k);
      DictionaryEntry e;
      e.phrase = as_string(require(entries[k], "phrase", p), child(p, "phrase"));
      e.query_similarity = as_double(require(entries[k], "query_similarity", p), child(p, "query_similarity"));
      e.embedding = read_embedding(require(entries[k], "embedding", p), dim, child(p, "embedding"));
      if (k > 0 && e.query_similarity > d.entries.back().query_similarity) {
        bad_field(child(p, "query_similarity"), "entries must be sorted by descending similarity");
      }
      for (std::size_t j = 0; j < d.entries.size(); ++j) {
        if (similarity(e.embedding, d.entries[j].embedding, d.mode) > d.nms_threshold) {
          bad_field(child(p, "embedding"), "similarity to entry " + std::to_string(j) +
                                               " exceeds nms_threshold");
        }
      }
      d.entries.push_back(std::move(e));
    }
    out.push_back(std::move(d));
  }
  return out;
}

// --- prompts ---

json prompts_to_json(const std::vector<VisualPrompt>& prompts, std::size_t dim) {
  json doc = header(kPromptsFormat);
  doc["dim"] = dim;
  json arr = json::array();
  for (const auto& p : prompts) {
    std::vector<double> flat;
    flat.reserve(p.size() * dim);
    for (const auto& row : p.vectors) flat.insert(flat.end(), row.begin(), row.end());
    arr.push_back({{"category", p.category_id},
                   {"n_vectors", p.size()},
                   {"independence", p.params_used.independence},
                   {"fusion_probability", p.params_used.fusion_probability},
                   {"vectors", flat}});
  }
  doc["prompts"] = std::move(arr);
  return doc;
}

std::vector<VisualPrompt> prompts_from_json(const json& doc, std::size_t* dim_out) {
  check_header(doc, kPromptsFormat);
  const std::size_t dim = read_dim(doc);
  if (dim_out != nullptr) *dim_out = dim;
  std::vector<VisualPrompt> out;
  std::set<CategoryId> seen;
  const json& arr = as_array(require(doc, "prompts", ""), "/prompts");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = child("/prompts", i);
    VisualPrompt p;
    p.category_id = static_cast<CategoryId>(as_int(require(arr[i], "category", path), child(path, "category")));
    if (!seen.insert(p.category_id).second) bad_field(child(path, "category"), "duplicate category");
    const std::size_t n = as_count(require(arr[i], "n_vectors", path), child(path, "n_vectors"));
    if (n == 0) bad_field(child(path, "n_vectors"), "must be at least 1");
    p.params_used.n_vectors = n;
    p.params_used.independence =
        as_double(require(arr[i], "independence", path), child(path, "independence"));
    p.params_used.fusion_probability =
        as_double(require(arr[i], "fusion_probability", path), child(path, "fusion_probability"));
    const std::string vpath = child(path, "vectors");
    const json& flat = as_array(require(arr[i], "vectors", path), vpath);
    if (flat.size() != n * dim) {
      fail(ErrorCode::DimensionMismatch, "field " + vpath + ": expected n_vectors*dim = " +
                                             std::to_string(n * dim) + " numbers, got " +
                                             std::to_string(flat.size()));
    }
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> row(dim);
      for (std::size_t d = 0; d < dim; ++d) row[d] = as_double(flat[k * dim + d], child(vpath, k * dim + d));
      p.vectors.emplace_back(std::move(row));
    }
    out.push_back(std::move(p));
  }
  return out;
}

// --- train config ---

json to_json(const TrainConfig& c) {
  json doc = header(kConfigFormat);
  doc["n_vectors"] = c.n_vectors;
  doc["independence"] = c.independence;
  doc["neg_probability"] = c.neg_probability;
  doc["fusion_probability"] = c.fusion_probability;
  doc["nms_threshold"] = c.nms_threshold;
  doc["top_k"] = c.top_k;
  doc["neg_max_len"] = c.neg_max_len;
  doc["temperature"] = c.temperature;
  doc["learning_rate"] = c.learning_rate;
  doc["epochs"] = c.epochs;
  doc["batch_size"] = c.batch_size;
  doc["seed"] = c.seed;
  doc["alignment_term"] = to_string(c.alignment.term);
  doc["branch_rule"] = to_string(c.alignment.branch);
  doc["similarity"] = to_string(c.similarity);
  doc["adamw"] = {{"beta1", c.adamw.beta1},
                  {"beta2", c.adamw.beta2},
                  {"eps", c.adamw.eps},
                  {"weight_decay", c.adamw.weight_decay}};
  doc["init"] = to_string(c.init);
  doc["init_phrase"] = c.init_phrase;
  return doc;
}

TrainConfig train_config_from_json(const json& doc) {
  check_header(doc, kConfigFormat);
  reject_unknown(doc,
                 {"format", "version", "n_vectors", "independence", "neg_probability",
                  "fusion_probability", "nms_threshold", "top_k", "neg_max_len", "temperature",
                  "learning_rate", "epochs", "batch_size", "seed", "alignment_term", "branch_rule",
                  "similarity", "adamw", "init", "init_phrase"},
                 "");
  TrainConfig c;
  auto count = [&](const char* key, std::size_t& dst) {
    if (const json* v = optional_field(doc, key)) dst = as_count(*v, child("", key));
  };
  auto real = [&](const char* key, double& dst) {
    if (const json* v = optional_field(doc, key)) dst = as_double(*v, child("", key));
  };
  count("n_vectors", c.n_vectors);
  real("independence", c.independence);
  real("neg_probability", c.neg_probability);
  real("fusion_probability", c.fusion_probability);
  real("nms_threshold", c.nms_threshold);
  count("top_k", c.top_k);
  count("neg_max_len", c.neg_max_len);
  real("temperature", c.temperature);
  real("learning_rate", c.learning_rate);
  count("epochs", c.epochs);
  count("batch_size", c.batch_size);
  if (const json* v = optional_field(doc, "seed")) c.seed = as_u64(*v, "/seed");
  if (const json* v = optional_field(doc, "alignment_term")) {
    c.alignment.term = alignment_term_from_string(as_string(*v, "/alignment_term"));
  }
  if (const json* v = optional_field(doc, "branch_rule")) {
    c.alignment.branch = branch_rule_from_string(as_string(*v, "/branch_rule"));
  }
  if (const json* v = optional_field(doc, "similarity")) {
    c.similarity = similarity_mode_from_string(as_string(*v, "/similarity"));
  }
  if (const json* v = optional_field(doc, "adamw")) {
    if (!v->is_object()) bad_field("/adamw", "expected an object");
    reject_unknown(*v, {"beta1", "beta2", "eps", "weight_decay"}, "/adamw");
    auto hyper = [&](const char* key, double& dst) {
      if (const json* h = optional_field(*v, key)) dst = as_double(*h, child("/adamw", key));
    };
    hyper("beta1", c.adamw.beta1);
    hyper("beta2", c.adamw.beta2);
    hyper("eps", c.adamw.eps);
    hyper("weight_decay", c.adamw.weight_decay);
  }
  if (const json* v = optional_field(doc, "init")) c.init = init_mode_from_string(as_string(*v, "/init"));
  if (const json* v = optional_field(doc, "init_phrase")) c.init_phrase = as_string(*v, "/init_phrase");
  c.validate();
  return c;
}

// --- testbed spec ---

json to_json(const TestbedSpec& s) {
  json doc = header(kTestbedFormat);
  doc["dim"] = s.dim;
  doc["categories"] = s.categories;
  doc["archetype_separation"] = s.archetype_separation;
  doc["modes_per_category"] = s.modes_per_category;
  doc["mode_similarity"] = s.mode_similarity;
  doc["noise_sigma"] = s.noise_sigma;
  doc["confusers_per_category"] = s.confusers_per_category;
  doc["confuser_similarity"] = s.confuser_similarity;
  doc["images"] = s.images;
  doc["eval_images"] = s.eval_images;
  doc["min_proposals"] = s.min_proposals;
  doc["max_proposals"] = s.max_proposals;
  doc["background_fraction"] = s.background_fraction;
  doc["confuser_object_rate"] = s.confuser_object_rate;
  doc["vocab_fillers"] = s.vocab_fillers;
  doc["context_features"] = s.context_features;
  doc["context_noise"] = s.context_noise;
  doc["box_jitter"] = s.box_jitter;
  doc["cross_plant_rate"] = s.cross_plant_rate;
  doc["pair_similarity"] = s.pair_similarity;
  doc["seed"] = s.seed;
  return doc;
}

TestbedSpec testbed_spec_from_json(const json& doc) {
  check_header(doc, kTestbedFormat);
  reject_unknown(doc,
                 {"format", "version", "dim", "categories", "archetype_separation",
                  "modes_per_category", "mode_similarity", "noise_sigma", "confusers_per_category",
                  "confuser_similarity", "images", "eval_images", "min_proposals", "max_proposals",
                  "background_fraction", "confuser_object_rate", "vocab_fillers",
                  "context_features", "context_noise", "box_jitter", "cross_plant_rate",
                  "pair_similarity", "seed"},
                 "");
  TestbedSpec s;
  auto count = [&](const char* key, std::size_t& dst) {
    if (const json* v = optional_field(doc, key)) dst = as_count(*v, child("", key));
  };
  auto real = [&](const char* key, double& dst) {
    if (const json* v = optional_field(doc, key)) dst = as_double(*v, child("", key));
  };
  count("dim", s.dim);
  count("categories", s.categories);
  real("archetype_separation", s.archetype_separation);
  count("modes_per_category", s.modes_per_category);
  real("mode_similarity", s.mode_similarity);
  real("noise_sigma", s.noise_sigma);
  count("confusers_per_category", s.confusers_per_category);
  real("confuser_similarity", s.confuser_similarity);
  count("images", s.images);
  count("eval_images", s.eval_images);
  count("min_proposals", s.min_proposals);
  count("max_proposals", s.max_proposals);
  real("background_fraction", s.background_fraction);
  real("confuser_object_rate", s.confuser_object_rate);
  count("vocab_fillers", s.vocab_fillers);
  count("context_features", s.context_features);
  real("context_noise", s.context_noise);
  real("box_jitter", s.box_jitter);
  real("cross_plant_rate", s.cross_plant_rate);
  real("pair_similarity", s.pair_similarity);
  if (const json* v = optional_field(doc, "seed")) s.seed = as_u64(*v, "/seed");
  s.validate();
  return s;
}

// --- planting record ---

namespace {

json objects_json(const std::vector<PlantedObject>& objects) {
  json arr = json::array();
  for (const auto& o : objects) {
    arr.push_back({{"image", o.image_id},
                   {"proposal", o.proposal},
                   {"kind", to_string(o.kind)},
                   {"category", o.category},
                   {"source", o.source},
                   {"box", box_json(o.box)}});
  }
  return arr;
}

std::vector<PlantedObject> objects_from_json(const json& arr, const std::string& path) {
  as_array(arr, path);
  std::vector<PlantedObject> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = child(path, i);
    PlantedObject o;
    o.image_id = static_cast<ImageId>(as_int(require(arr[i], "image", p), child(p, "image")));
    o.proposal = as_count(require(arr[i], "proposal", p), child(p, "proposal"));
    o.kind = plant_kind_from_string(as_string(require(arr[i], "kind", p), child(p, "kind")));
    o.category = static_cast<CategoryId>(as_int(require(arr[i], "category", p), child(p, "category")));
    o.source = as_count(require(arr[i], "source", p), child(p, "source"));
    o.box = read_box(require(arr[i], "box", p), child(p, "box"));
    out.push_back(o);
  }
  return out;
}

}  // namespace

json to_json(const PlantingRecord& r, std::size_t dim) {
  json doc = header(kPlantingFormat);
  doc["dim"] = dim;
  json archetypes = json::array();
  for (const auto& a : r.archetypes) archetypes.push_back(embedding_json(a));
  doc["archetypes"] = std::move(archetypes);
  json confusers = json::array();
  for (const auto& c : r.confusers) {
    confusers.push_back({{"phrase", c.phrase}, {"category", c.category}, {"cosine", c.cosine}});
  }
  doc["confusers"] = std::move(confusers);
  doc["train_objects"] = objects_json(r.train_objects);
  doc["eval_objects"] = objects_json(r.eval_objects);
  return doc;
}

PlantingRecord planting_from_json(const json& doc) {
  check_header(doc, kPlantingFormat);
  const std::size_t dim = read_dim(doc);
  PlantingRecord r;
  const json& archetypes = as_array(require(doc, "archetypes", ""), "/archetypes");
  for (std::size_t i = 0; i < archetypes.size(); ++i) {
    r.archetypes.push_back(read_embedding(archetypes[i], dim, child("/archetypes", i)));
  }
  const json& confusers = as_array(require(doc, "confusers", ""), "/confusers");
  for (std::size_t i = 0; i < confusers.size(); ++i) {
    const std::string p = child("/confusers", i);
    r.confusers.push_back(
        {as_string(require(confusers[i], "phrase", p), child(p, "phrase")),
         static_cast<CategoryId>(as_int(require(confusers[i], "category", p), child(p, "category"))),
         as_double(require(confusers[i], "cosine", p), child(p, "cosine"))});
  }
  r.train_objects = objects_from_json(require(doc, "train_objects", ""), "/train_objects");
  r.eval_objects = objects_from_json(require(doc, "eval_objects", ""), "/eval_objects");
  return r;
}

// --- reports ---

json to_json(const TrainReport& report, std::size_t dim, bool include_timing) {
  json doc = header(kTrainReportFormat);
  doc["seed"] = report.seed;
  json epochs = json::array();
  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    const auto& e = report.epochs[i];
    epochs.push_back({{"epoch", i + 1},
                      {"alignment", e.alignment},
                      {"l1_box", e.l1_box},
                      {"giou_loss", e.giou_loss},
                      {"steps", e.steps}});
  }
  doc["epochs"] = std::move(epochs);
  json config = to_json(report.config);
  config.erase("format");
  config.erase("version");
  doc["config"] = std::move(config);
  doc["prompt_count"] = report.prompts.size();
  doc["dim"] = dim;
  if (include_timing) doc["wall_clock_seconds"] = report.wall_clock_seconds;
  return doc;
}

json to_json(const EvalReport& report) {
  json doc = header(kEvalReportFormat);
  doc["thresholds"] = report.thresholds;
  doc["map"] = report.map;
  doc["map50"] = report.map50;
  doc["gt_total"] = report.gt_total;
  doc["detection_total"] = report.detection_total;
  json cats = json::array();
  for (const auto& c : report.categories) {
    cats.push_back({{"id", c.id},
                    {"name", c.name},
                    {"gt_count", c.gt_count},
                    {"detection_count", c.detection_count},
                    {"ap", c.ap}});
  }
  doc["categories"] = std::move(cats);
  return doc;
}

EvalReport eval_report_from_json(const json& doc) {
  check_header(doc, kEvalReportFormat);
  EvalReport r;
  const json& thresholds = as_array(require(doc, "thresholds", ""), "/thresholds");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    r.thresholds.push_back(as_double(thresholds[i], child("/thresholds", i)));
  }
  r.map = as_double(require(doc, "map", ""), "/map");
  r.map50 = as_double(require(doc, "map50", ""), "/map50");
  r.gt_total = as_count(require(doc, "gt_total", ""), "/gt_total");
  r.detection_total = as_count(require(doc, "detection_total", ""), "/detection_total");
  const json& cats = as_array(require(doc, "categories", ""), "/categories");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string p = child("/categories", i);
    CategoryReport c;
    c.id = static_cast<CategoryId>(as_int(require(cats[i], "id", p), child(p, "id")));
    c.name = as_string(require(cats[i], "name", p), child(p, "name"));
    c.gt_count = as_count(require(cats[i], "gt_count", p), child(p, "gt_count"));
    c.detection_count = as_count(require(cats[i], "detection_count", p), child(p, "detection_count"));
    const std::string apath = child(p, "ap");
    const json& ap = as_array(require(cats[i], "ap", p), apath);
    for (std::size_t k = 0; k < ap.size(); ++k) {
      const double v = as_double(ap[k], child(apath, k));
      if (v < 0.0 || v > 1.0) bad_field(child(apath, k), "AP must lie in [0, 1]");
      c.ap.push_back(v);
    }
    r.categories.push_back(std::move(c));
  }
  return r;
}

json to_json(const CombinedReport& report) {
  json doc = header(kCombinedReportFormat);
  json solo = json::array();
  for (const auto& s : report.solo) {
    json r = to_json(s);
    r.erase("format");
    r.erase("version");
    solo.push_back(std::move(r));
  }
  doc["solo"] = std::move(solo);
  json combined = to_json(report.combined);
  combined.erase("format");
  combined.erase("version");
  doc["combined"] = std::move(combined);
  doc["mean_solo_map"] = report.mean_solo_map;
  doc["drop"] = report.drop;
  return doc;
}

// --- files ---

Vocabulary load_vocabulary(const fs::path& path) { return vocabulary_from_json(read_json(path)); }
void save_vocabulary(const Vocabulary& vocab, const fs::path& path) { write_json(to_json(vocab), path); }

Dataset load_dataset(const fs::path& path) { return dataset_from_json(read_json(path)); }
void save_dataset(const Dataset& dataset, const fs::path& path) { write_json(to_json(dataset), path); }

std::vector<SimilarityDictionary> load_dictionaries(const fs::path& path, std::size_t* dim) {
  return dictionaries_from_json(read_json(path), dim);
}
void save_dictionaries(const std::vector<SimilarityDictionary>& dicts, std::size_t dim,
                       const fs::path& path) {
  write_json(dictionaries_to_json(dicts, dim), path);
}

std::vector<VisualPrompt> load_prompts(const fs::path& path, std::size_t* dim) {
  return prompts_from_json(read_json(path), dim);
}
void save_prompts(const std::vector<VisualPrompt>& prompts, std::size_t dim, const fs::path& path) {
  write_json(prompts_to_json(prompts, dim), path);
}

TrainConfig load_train_config(const fs::path& path) { return train_config_from_json(read_json(path)); }
void save_train_config(const TrainConfig& config, const fs::path& path) {
  write_json(to_json(config), path);
}

TestbedSpec load_testbed_spec(const fs::path& path) { return testbed_spec_from_json(read_json(path)); }
void save_testbed_spec(const TestbedSpec& spec, const fs::path& path) { write_json(to_json(spec), path); }

PlantingRecord load_planting(const fs::path& path) { return planting_from_json(read_json(path)); }
void save_planting(const PlantingRecord& record, std::size_t dim, const fs::path& path) {
  write_json(to_json(record, dim), path);
}

EvalReport load_eval_report(const fs::path& path) { return eval_report_from_json(read_json(path)); }
void save_eval_report(const EvalReport& report, const fs::path& path) {
  write_json(to_json(report), path);
}

void require_same_dim(std::size_t a, const std::string& what_a, std::size_t b,
                      const std::string& what_b) {
  if (a != b) {
    fail(ErrorCode::DimensionMismatch, what_a + " has dimension " + std::to_string(a) + " but " +
                                           what_b + " has dimension " + std::to_string(b));
  }
}

}  // namespace visprompt::io
