#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "sparse_tensor.hpp"
#include "tensor_train.hpp"

namespace ttals::io {

// Binary formats are little-endian.
//   .dtb: "DTB1", u32 N, N x u64 dims, prod(dims) x f64 values (first index fastest)
//   .ttb: "TTB1", u32 N, (N + 1) x u64 ranks R_0..R_N, N x u64 dims, then each
//         core's R_{k-1} * I_k * R_k f64 values in core storage order.

void write_dtb(const std::filesystem::path& path, const DenseTensor<double>& x);
DenseTensor<double> read_dtb(const std::filesystem::path& path);

void write_ttb(const std::filesystem::path& path, const TensorTrain<double>& tt);
TensorTrain<double> read_ttb(const std::filesystem::path& path);

/// FROSTT coordinate text: one nonzero per line, N 1-based coordinates then a
/// value. Blank lines and lines starting with '#' are skipped, except an
/// optional "# dims I_1 ... I_N" line which fixes the shape. Without it the
/// shape is the per-mode coordinate maximum.
SparseTensor<double> read_frostt(const std::filesystem::path& path);
SparseTensor<double> parse_frostt(const std::string& text);
void write_frostt(const std::filesystem::path& path, const SparseTensor<double>& x, bool with_dims_header = true);

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

}  // namespace ttals::io
