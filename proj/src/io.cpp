#include "ttals/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <openssl/evp.h>

namespace ttals::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError(fmt::format("{}: truncated file", path.string()));
  return v;
}

void get_doubles(std::istream& is, double* dst, std::size_t count, const std::filesystem::path& path) {
  const auto bytes = static_cast<std::streamsize>(count * sizeof(double));
  if (!is.read(reinterpret_cast<char*>(dst), bytes)) throw DataError(fmt::format("{}: truncated value block", path.string()));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(fmt::format("cannot open {} for writing", path.string()));
  return os;
}

std::ifstream open_in(const std::filesystem::path& path, const char* magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(fmt::format("cannot open {}", path.string()));
  char m[4];
  if (!is.read(m, 4) || std::memcmp(m, magic, 4) != 0) throw DataError(fmt::format("{}: bad magic, expected {}", path.string(), magic));
  return is;
}

Index checked_dim(std::uint64_t v, const std::filesystem::path& path) {
  if (v == 0 || v > (std::uint64_t{1} << 62)) throw DataError(fmt::format("{}: invalid dimension {}", path.string(), v));
  return static_cast<Index>(v);
}

}  // namespace

void write_dtb(const std::filesystem::path& path, const DenseTensor<double>& x) {
  auto os = open_out(path);
  os.write("DTB1", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(x.order()));
  for (Index d : x.shape().dims()) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
  os.write(reinterpret_cast<const char*>(x.values().data()), static_cast<std::streamsize>(x.size() * sizeof(double)));
  if (!os) throw DataError(fmt::format("write to {} failed", path.string()));
}

DenseTensor<double> read_dtb(const std::filesystem::path& path) {
  auto is = open_in(path, "DTB1");
  const auto n = get<std::uint32_t>(is, path);
  if (n == 0) throw DataError(fmt::format("{}: zero-order tensor", path.string()));
  std::vector<Index> dims;
  for (std::uint32_t k = 0; k < n; ++k) dims.push_back(checked_dim(get<std::uint64_t>(is, path), path));
  Shape shape = [&] {
    try {
      return Shape(dims);
    } catch (const DomainError& e) {
      throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }();
  Vector<double> values(static_cast<Index>(shape.size()));
  get_doubles(is, values.data(), shape.size(), path);
  for (Index t = 0; t < values.size(); ++t)
    if (!std::isfinite(values[t])) throw DataError(fmt::format("{}: non-finite value at {}", path.string(), t));
  return DenseTensor<double>(std::move(shape), std::move(values));
}

void write_ttb(const std::filesystem::path& path, const TensorTrain<double>& tt) {
  auto os = open_out(path);
  os.write("TTB1", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tt.order()));
  for (Index r : tt.ranks()) put<std::uint64_t>(os, static_cast<std::uint64_t>(r));
  const Shape shape = tt.shape();
  for (Index d : shape.dims()) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
  for (const auto& c : tt.cores())
    os.write(reinterpret_cast<const char*>(c.left().data()), static_cast<std::streamsize>(c.left().size() * sizeof(double)));
  if (!os) throw DataError(fmt::format("write to {} failed", path.string()));
}

TensorTrain<double> read_ttb(const std::filesystem::path& path) {
  auto is = open_in(path, "TTB1");
  const auto n = get<std::uint32_t>(is, path);
  if (n == 0) throw DataError(fmt::format("{}: zero-order train", path.string()));
  std::vector<Index> ranks, dims;
  for (std::uint32_t k = 0; k <= n; ++k) ranks.push_back(checked_dim(get<std::uint64_t>(is, path), path));
  for (std::uint32_t k = 0; k < n; ++k) dims.push_back(checked_dim(get<std::uint64_t>(is, path), path));
  std::vector<Core<double>> cores;
  for (std::uint32_t k = 0; k < n; ++k) {
    Core<double> c(ranks[k], dims[k], ranks[k + 1]);
    get_doubles(is, c.left().data(), static_cast<std::size_t>(c.left().size()), path);
    cores.push_back(std::move(c));
  }
  try {
    return TensorTrain<double>(std::move(cores));
  } catch (const DomainError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

SparseTensor<double> parse_frostt(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::vector<Index>> header;
  std::size_t order = 0;
  std::vector<Index> coords;
  std::vector<double> values;
  std::vector<Index> maxima;

  auto tokens_of = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ts(s);
    for (std::string t; ts >> t;) out.push_back(t);
    return out;
  };
  auto to_index = [&](const std::string& t) {
    Index v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
      throw DataError(fmt::format("line {}: non-numeric coordinate '{}'", line_no, t));
    return v;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      auto toks = tokens_of(line.substr(first + 1));
      if (!toks.empty() && toks[0] == "dims") {
        std::vector<Index> d;
        for (std::size_t t = 1; t < toks.size(); ++t) {
          d.push_back(to_index(toks[t]));
          if (d.back() < 1) throw DataError(fmt::format("line {}: dimension must be positive", line_no));
        }
        if (d.empty()) throw DataError(fmt::format("line {}: empty dims header", line_no));
        header = std::move(d);
      }
      continue;
    }
    const auto toks = tokens_of(line);
    if (order == 0) {
      if (toks.size() < 2) throw DataError(fmt::format("line {}: expected coordinates and a value", line_no));
      order = toks.size() - 1;
      maxima.assign(order, 0);
    } else if (toks.size() != order + 1) {
      throw DataError(fmt::format("line {}: expected {} tokens, found {}", line_no, order + 1, toks.size()));
    }
    for (std::size_t k = 0; k < order; ++k) {
      const Index c = to_index(toks[k]);
      if (c < 1) throw DataError(fmt::format("line {}: coordinate {} is below 1", line_no, c));
      coords.push_back(c - 1);
      maxima[k] = std::max(maxima[k], c);
    }
    double v = 0;
    const auto& vt = toks[order];
    const auto [p, ec] = std::from_chars(vt.data(), vt.data() + vt.size(), v);
    if (ec != std::errc() || p != vt.data() + vt.size()) throw DataError(fmt::format("line {}: non-numeric value '{}'", line_no, vt));
    values.push_back(v);
  }
  if (values.empty()) throw DataError("empty tensor");
  std::vector<Index> dims = maxima;
  if (header) {
    if (header->size() != order) throw DataError(fmt::format("dims header has {} modes, entries have {}", header->size(), order));
    for (std::size_t k = 0; k < order; ++k)
      if (maxima[k] > (*header)[k]) throw DataError(fmt::format("coordinate {} exceeds header dim {} in mode {}", maxima[k], (*header)[k], k + 1));
    dims = *header;
  }
  try {
    return SparseTensor<double>(Shape(dims), std::move(coords), std::move(values));
  } catch (const DomainError& e) {
    throw DataError(e.what());
  }
}

SparseTensor<double> read_frostt(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return parse_frostt(ss.str());
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_frostt(const std::filesystem::path& path, const SparseTensor<double>& x, bool with_dims_header) {
  std::ofstream os(path);
  if (!os) throw DataError(fmt::format("cannot open {} for writing", path.string()));
  if (with_dims_header) os << "# dims " << fmt::format("{}", fmt::join(x.shape().dims(), " ")) << '\n';
  for (Index e = 0; e < x.nnz(); ++e) {
    for (Index c : x.coordinate(e)) os << (c + 1) << ' ';
    os << fmt::format("{:.17g}", x.values()[static_cast<std::size_t>(e)]) << '\n';
  }
  if (!os) throw DataError(fmt::format("write to {} failed", path.string()));
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(fmt::format("cannot open {}", path.string()));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (is.read(buf.data(), buf.size()) || is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

}  // namespace ttals::io
