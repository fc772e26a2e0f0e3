#pragma once

/// Binary archive helpers. All numeric payloads are little-endian float64.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rom/fom.hpp"

namespace rom::io {

void write_file(const std::filesystem::path& p, const std::string& text);
std::string read_file(const std::filesystem::path& p);

void append_f64_le(std::string& buf, const double* v, std::size_t n);
/// Reads n doubles starting at offset; advances offset. Throws on overrun.
std::vector<double> read_f64_le(const std::string& buf, std::size_t& offset, std::size_t n);

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::filesystem::path& p);
/// Combined checksum of every regular file under a directory, in sorted
/// relative-path order (path bytes included).
std::uint64_t fnv1a64_dir(const std::filesystem::path& dir);

void save_snapshots(const SnapshotSet& set, const std::filesystem::path& dir);
SnapshotSet load_snapshots(const std::filesystem::path& dir);

}  // namespace rom::io
