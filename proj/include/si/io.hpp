#pragma once

// File formats: CSV matrices (rows = samples), the binary little-endian
// f64 matrix with an 8-byte header (rows, cols as u32), mixture specs as
// JSON, and feature-model files (JSON header + binary payload).

#include <filesystem>
#include <string>

#include "si/gmm.hpp"
#include "si/regression.hpp"
#include "si/types.hpp"

namespace si::io {

Mat read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Mat& m,
               const std::vector<std::string>& header = {});

Mat read_matrix(const std::filesystem::path& path);  // binary format
void write_matrix(const std::filesystem::path& path, const Mat& m);

GaussianMixture read_mixture(const std::filesystem::path& path);
void write_mixture(const std::filesystem::path& path, const GaussianMixture& g);

void save_model(const std::filesystem::path& path, const FeatureModel& model);
FeatureModel load_model(const std::filesystem::path& path);

// stable 64-bit content hash (FNV-1a), used for run manifests
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace si::io
