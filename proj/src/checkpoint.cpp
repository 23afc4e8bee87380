/*
 * Copyright 2026 The sysid Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "checkpoint.hpp"

#include "errors.hpp"
#include "text.hpp"

namespace sysid {

namespace {

constexpr const char* kFormat = "sysid-checkpoint";
constexpr int kVersion = 1;

nlohmann::json tensor_json(const std::string& name, const Tensor& t) {
  return {{"name", name}, {"shape", t.shape()}, {"data", t.storage()}};
}

void load_into(const nlohmann::json& entries, const std::string& name, Tensor& target) {
  for (const auto& e : entries) {
    if (e.at("name").get<std::string>() != name) continue;
    const auto shape = e.at("shape").get<Shape>();
    if (shape != target.shape())
      throw SchemaError("checkpoint tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                        shape_string(target.shape()));
    auto data = e.at("data").get<std::vector<double>>();
    if (data.size() != target.size()) throw SchemaError("checkpoint tensor '" + name + "' has wrong length");
    target = Tensor(shape, std::move(data));
    return;
  }
  throw SchemaError("checkpoint is missing tensor '" + name + "'");
}

}  // namespace

nlohmann::json checkpoint_to_json(const Model& model, const std::optional<Normalization>& normalization) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto* p : model.parameters()) params.push_back(tensor_json(p->name, p->value));
  nlohmann::json bufs = nlohmann::json::array();
  for (const auto& b : const_cast<Model&>(model).buffers()) bufs.push_back(tensor_json(b.name, *b.tensor));
  nlohmann::json j = {{"format", kFormat},     {"version", kVersion}, {"config", model.config()},
                      {"parameters", params}, {"buffers", bufs}};
  j["normalization"] = normalization ? nlohmann::json(*normalization) : nlohmann::json(nullptr);
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw SchemaError("not a sysid checkpoint");
    if (j.at("version").get<int>() != kVersion)
      throw SchemaError("unsupported checkpoint version " + j.at("version").dump());
    const ModelConfig config = model_config_from_json(j.at("config"));
    Rng rng(0);
    Checkpoint ck{build_model(config, rng), std::nullopt};
    for (auto* p : ck.model->parameters()) load_into(j.at("parameters"), p->name, p->value);
    for (auto& b : ck.model->buffers()) load_into(j.at("buffers"), b.name, *b.tensor);
    if (j.contains("normalization") && !j.at("normalization").is_null())
      ck.normalization = j.at("normalization").get<Normalization>();
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const std::optional<Normalization>& normalization) {
  write_file(path, checkpoint_to_json(model, normalization).dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace sysid
