#include "tshape/checkpoint.hpp"

#include "tshape/errors.hpp"

#include <map>

namespace tshape {

namespace {

constexpr std::string_view kFormat = "tshape-checkpoint";
constexpr std::string_view kParamPrefix = "param.";

std::string join_sizes(const std::vector<std::size_t>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

std::size_t parse_size(std::string_view text, std::string_view what) {
  const auto v = parse_int(text);
  if (v < 0) throw ParseError(std::string(what) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

std::string encode_tensor(const Tensor& t) {
  std::string s = join_sizes(t.shape(), 'x') + " :";
  for (Eigen::Index i = 0; i < t.values().size(); ++i) {
    s += ' ';
    s += format_double(t.values()[i]);
  }
  return s;
}

Eigen::VectorXd decode_values(const std::string& path, std::string_view text, const Shape& expected) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ParseError("parameter " + path + ": missing ':' separator");
  Shape shape;
  for (const auto& e : split(trim(text.substr(0, colon)), 'x')) shape.push_back(parse_size(e, "extent"));
  if (shape != expected)
    throw DimensionError("parameter " + path + ": stored shape " + shape_string(shape) + " does not match " +
                         shape_string(expected) + " required by the configuration");
  Eigen::VectorXd values(static_cast<Eigen::Index>(shape_size(shape)));
  std::string_view rest = trim(text.substr(colon + 1));
  Eigen::Index i = 0;
  while (!rest.empty()) {
    const auto sp = rest.find(' ');
    const auto token = rest.substr(0, sp);
    if (i >= values.size()) throw ParseError("parameter " + path + ": too many values");
    values[i++] = parse_double(token);
    rest = sp == std::string_view::npos ? std::string_view{} : trim(rest.substr(sp + 1));
  }
  if (i != values.size()) throw ParseError("parameter " + path + ": expected " + std::to_string(values.size()) +
                                           " values, found " + std::to_string(i));
  return values;
}

}  // namespace

void write_model_config(const ModelConfig& config, KeyValueDoc& doc) {
  doc.set_int("model.window", static_cast<std::int64_t>(config.window));
  doc.set_int("model.patch", static_cast<std::int64_t>(config.patch));
  doc.set("model.kernel_sizes", join_sizes(config.kernel_sizes, ','));
  doc.set_int("model.channels_per_scale", static_cast<std::int64_t>(config.channels_per_scale));
  doc.set_int("model.heads_local", static_cast<std::int64_t>(config.heads_local));
  doc.set_int("model.heads_global", static_cast<std::int64_t>(config.heads_global));
  doc.set("model.ablation", std::string(to_string(config.ablation)));
}

ModelConfig read_model_config(const KeyValueDoc& doc, ModelConfig base) {
  if (auto v = doc.find("model.window")) base.window = parse_size(*v, "model.window");
  if (auto v = doc.find("model.patch")) base.patch = parse_size(*v, "model.patch");
  if (auto v = doc.find("model.kernel_sizes")) {
    base.kernel_sizes.clear();
    for (const auto& k : split(*v, ',')) base.kernel_sizes.push_back(parse_size(k, "kernel size"));
  }
  if (auto v = doc.find("model.channels_per_scale")) base.channels_per_scale = parse_size(*v, "model.channels_per_scale");
  if (auto v = doc.find("model.heads_local")) base.heads_local = parse_size(*v, "model.heads_local");
  if (auto v = doc.find("model.heads_global")) base.heads_global = parse_size(*v, "model.heads_global");
  if (auto v = doc.find("model.ablation")) base.ablation = parse_ablation(*v);
  return base;
}

KeyValueDoc checkpoint_document(const Checkpoint& ck) {
  KeyValueDoc doc;
  doc.set("format", std::string(kFormat));
  doc.set_int("version", kCheckpointVersion);
  write_model_config(ck.config, doc);
  doc.set("norm.mean", format_double(ck.norm_mean));
  doc.set("norm.stddev", format_double(ck.norm_stddev));
  for (const auto& [path, t] : ck.params.learnable()) doc.set(std::string(kParamPrefix) + path, encode_tensor(t));
  for (const auto& [path, t] : ck.params.buffers()) doc.set(std::string(kParamPrefix) + path, encode_tensor(t));
  return doc;
}

Checkpoint checkpoint_from_document(const KeyValueDoc& doc) {
  if (doc.find("format") != std::string(kFormat)) throw ParseError("not a tshape checkpoint");
  const auto version = doc.get_int("version");
  if (version != kCheckpointVersion)
    throw ParseError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kCheckpointVersion) + ")");
  Checkpoint ck;
  ck.config = read_model_config(doc);
  ck.config.validate();
  ck.norm_mean = doc.get_double("norm.mean");
  ck.norm_stddev = doc.get_double("norm.stddev");
  if (!(ck.norm_stddev > 0.0)) throw ParseError("norm.stddev must be positive");

  std::map<std::string, Shape> expected;
  for (auto& [path, shape] : parameter_shapes(ck.config)) expected.emplace(path, shape);
  for (const auto& [key, value] : doc.entries())
    if (key.starts_with(kParamPrefix) && !expected.contains(key.substr(kParamPrefix.size())))
      throw ParseError("unexpected parameter '" + key.substr(kParamPrefix.size()) + "' for this configuration");

  ck.params = init_params(ck.config, 0);
  auto assign = [&](const std::string& path, Tensor t) {
    const auto value = doc.find(std::string(kParamPrefix) + path);
    if (!value) throw ParseError("checkpoint is missing parameter '" + path + "'");
    t.values() = decode_values(path, *value, expected.at(path));
  };
  for (auto& [path, t] : ck.params.learnable()) assign(path, t);
  for (auto& [path, t] : ck.params.buffers()) assign(path, t);
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  checkpoint_document(ck).save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_document(KeyValueDoc::load(path));
}

}  // namespace tshape
