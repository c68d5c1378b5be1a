#pragma once

// JSON model dumps. Each layer stores the unique half of its symmetric filter
// (taps_re[m], taps_im[m] = h_m for m = 0 ... K) and its mask.

#include "ldbp/train.hpp"

#include <json.hpp>

#include <filesystem>

namespace ldbp::io {

nlohmann::ordered_json model_to_json(const model::LdbpModel& model);
model::LdbpModel model_from_json(const nlohmann::json& j);

/// Model plus optimizer moments and the completed-iteration count.
nlohmann::ordered_json state_to_json(const train::TrainState& state);
train::TrainState state_from_json(const nlohmann::json& j);

/// Doubles are written with round-trip precision so reloading is exact.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace ldbp::io
