#include "ik/text_io.hpp"

#include "ik/error.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace ik {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!text.empty() && space(text.front())) text.remove_prefix(1);
  while (!text.empty() && space(text.back())) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InvalidArgument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace {

// Parses `MAGIC key=value ...` into a map, checking the magic word.
std::map<std::string, std::string> parse_header(const std::string& line, std::string_view magic) {
  std::istringstream ss(line);
  std::string word;
  ss >> word;
  if (word != magic) throw ParseError(1, "expected " + std::string(magic) + " header");
  std::map<std::string, std::string> fields;
  while (ss >> word) {
    auto eq = word.find('=');
    if (eq == std::string::npos) throw ParseError(1, "malformed header field '" + word + "'");
    fields[word.substr(0, eq)] = word.substr(eq + 1);
  }
  return fields;
}

std::uint64_t header_uint(const std::map<std::string, std::string>& fields, const std::string& key) {
  auto it = fields.find(key);
  if (it == fields.end()) throw ParseError(1, "header is missing " + key);
  std::uint64_t v = 0;
  const auto& s = it->second;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(1, "bad value for " + key + ": '" + s + "'");
  }
  return v;
}

}  // namespace

void write_model(std::ostream& out, const IKModel& model) {
  out << "IKM1 psi=" << model.psi() << " t=" << model.t() << " dim=" << model.dim()
      << " seed=" << model.seed() << '\n';
  // Each pool point is rendered once and reused across blocks.
  std::vector<std::string> rendered(model.pool().size());
  for (std::size_t k = 0; k < rendered.size(); ++k) {
    const Eigen::VectorXd v = model.pool()[k].to_dense();
    std::string line;
    for (Index j = 0; j < v.size(); ++j) {
      if (j) line += ',';
      line += format_double(v[j]);
    }
    rendered[k] = std::move(line);
  }
  for (auto id : model.reference_ids()) out << rendered[id] << '\n';
}

IKModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty model file");
  const auto fields = parse_header(line, "IKM1");
  const auto psi = static_cast<int>(header_uint(fields, "psi"));
  const auto t = static_cast<int>(header_uint(fields, "t"));
  const auto dim = static_cast<Index>(header_uint(fields, "dim"));
  const auto seed = header_uint(fields, "seed");
  if (psi < 1 || t < 1 || dim < 1) throw ParseError(1, "psi, t and dim must be positive");

  std::vector<FeatureVector> pool;
  std::vector<std::int32_t> ids;
  std::unordered_map<std::string, std::int32_t> seen;
  const std::size_t expected = static_cast<std::size_t>(psi) * t;
  std::size_t line_no = 1;
  while (ids.size() < expected && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto [it, inserted] = seen.try_emplace(line, static_cast<std::int32_t>(pool.size()));
    if (inserted) {
      Eigen::VectorXd v(dim);
      Index j = 0;
      std::size_t start = 0;
      while (true) {
        auto comma = line.find(',', start);
        auto tok = std::string_view(line).substr(start, comma == std::string::npos
                                                            ? std::string::npos
                                                            : comma - start);
        if (j >= dim) throw ParseError(line_no, "more than dim=" + std::to_string(dim) + " values");
        try {
          v[j++] = parse_double(tok);
        } catch (const InvalidArgument& e) {
          throw ParseError(line_no, e.what());
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (j != dim) {
        throw ParseError(line_no, "expected " + std::to_string(dim) + " values, got " +
                                      std::to_string(j));
      }
      pool.push_back(FeatureVector::dense(std::move(v)));
    }
    ids.push_back(it->second);
  }
  if (ids.size() != expected) {
    throw ParseError(line_no, "expected " + std::to_string(expected) + " reference lines, got " +
                                  std::to_string(ids.size()));
  }
  return IKModel(psi, t, dim, seed, std::move(pool), std::move(ids));
}

void write_codes(std::ostream& out, std::span<const IKCode> codes) {
  const int psi = codes.empty() ? 0 : codes.front().psi;
  const int t = codes.empty() ? 0 : codes.front().t();
  out << "IKC1 psi=" << psi << " t=" << t << " n=" << codes.size() << '\n';
  for (const auto& c : codes) {
    if (c.psi != psi || c.t() != t) throw IncompatibleCodes("codes from different models");
    for (int i = 0; i < t; ++i) {
      if (i) out << ' ';
      out << c.cells[i];
    }
    out << '\n';
  }
}

std::vector<IKCode> read_codes(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty code file");
  const auto fields = parse_header(line, "IKC1");
  const auto psi = static_cast<int>(header_uint(fields, "psi"));
  const auto t = static_cast<int>(header_uint(fields, "t"));
  const auto n = header_uint(fields, "n");
  std::vector<IKCode> codes;
  codes.reserve(n);
  std::size_t line_no = 1;
  while (codes.size() < n && std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    IKCode c;
    c.psi = psi;
    long long cell = 0;
    while (ss >> cell) {
      if (cell < 0 || cell >= psi) {
        throw ParseError(line_no, "cell " + std::to_string(cell) + " outside [0, psi)");
      }
      c.cells.push_back(static_cast<std::int32_t>(cell));
    }
    if (!ss.eof()) throw ParseError(line_no, "non-integer cell index");
    if (c.t() != t) {
      throw ParseError(line_no, "expected " + std::to_string(t) + " cells, got " +
                                    std::to_string(c.t()));
    }
    codes.push_back(std::move(c));
  }
  if (codes.size() != n) {
    throw ParseError(line_no, "expected " + std::to_string(n) + " code lines");
  }
  return codes;
}

}  // namespace ik
