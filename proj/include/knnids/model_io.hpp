#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "knnids/calibrate.hpp"
#include "knnids/detector.hpp"

namespace knnids::streams {

inline constexpr const char* kModelVersion = "knnids-model/1";

struct ModelFile {
    detector::TrainedModel model;
    std::optional<calibrate::Calibration> calibration;

    friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

/// Single JSON document; "checksum" is the SHA-256 of the compact dump of all
/// other fields.
std::string model_to_string(const ModelFile& m);

/// Throws VersionMismatch for an unknown version tag and CorruptModel for
/// unparsable content, missing fields or a checksum mismatch.
ModelFile model_from_string(const std::string& text);

void save_model(const ModelFile& m, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);

}  // namespace knnids::streams
