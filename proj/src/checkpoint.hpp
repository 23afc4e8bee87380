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

#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include <json.hpp>

#include "data.hpp"
#include "model.hpp"

namespace sysid {

struct Checkpoint {
  std::unique_ptr<Model> model;
  std::optional<Normalization> normalization;
};

nlohmann::json checkpoint_to_json(const Model& model, const std::optional<Normalization>& normalization);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const std::optional<Normalization>& normalization);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sysid
