#include "hdrec/nn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "hdrec/error.hpp"
#include "hdrec/io.hpp"

namespace hdrec::nn {
namespace {

using Kind = ParseError::Kind;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, sep);) out.push_back(part);
  return out;
}

std::string field(const std::vector<std::string>& parts, const std::string& key) {
  for (const auto& p : parts) {
    if (p.rfind(key + "=", 0) == 0) return p.substr(key.size() + 1);
  }
  throw ParseError(Kind::MalformedHeader, "layer entry without " + key);
}

}  // namespace

void write_weights(const ModelWeights& weights, const std::filesystem::path& header) {
  std::ofstream out(header, std::ios::binary);
  if (!out) throw ParseError(Kind::Io, "cannot write " + header.string());
  const DenoiserConfig& c = weights.config;
  out << "magic=HDRECW\n"
      << "n_scales=" << c.n_scales << "\nbase_channels=" << c.base_channels
      << "\nresidual_units_per_stage=" << c.residual_units_per_stage << "\nkernel=" << c.kernel
      << "\nseed=" << c.seed << "\nfingerprint=" << weights.fingerprint
      << "\nlayers=" << weights.params.entries().size() << '\n';
  std::vector<double> payload;
  std::size_t offset = 0;
  int index = 0;
  for (const auto& [name, array] : weights.params.entries()) {
    out << "layer." << index++ << "=name=" << name << ";shape=";
    for (std::size_t i = 0; i < array.shape.size(); ++i) out << (i ? "," : "") << array.shape[i];
    out << ";offset=" << offset << ";count=" << array.size() << '\n';
    payload.insert(payload.end(), array.values.begin(), array.values.end());
    offset += array.size() * 4;
  }
  if (!out) throw ParseError(Kind::Io, "write failed: " + header.string());
  write_float32_payload(payload_path(header), payload);
}

ModelWeights read_weights(const std::filesystem::path& header) {
  const Header h = read_header(header, "HDRECW");
  ModelWeights m;
  m.config.n_scales = h.get_int("n_scales");
  m.config.base_channels = h.get_int("base_channels");
  m.config.residual_units_per_stage = h.get_int("residual_units_per_stage");
  m.config.kernel = h.get_int("kernel");
  m.config.seed = std::stoull(h.get("seed"));
  m.fingerprint = h.get("fingerprint");
  const int n_layers = h.get_int("layers");
  std::size_t total = 0;
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::size_t offset, count;
  };
  std::vector<Entry> entries;
  for (int i = 0; i < n_layers; ++i) {
    const auto parts = split(h.get("layer." + std::to_string(i)), ';');
    Entry e{field(parts, "name"), {}, std::stoull(field(parts, "offset")), std::stoull(field(parts, "count"))};
    for (const auto& s : split(field(parts, "shape"), ',')) e.shape.push_back(std::stoi(s));
    if (e.offset != total * 4) throw ParseError(Kind::MalformedHeader, "layer " + e.name + " has a bad offset");
    total += e.count;
    entries.push_back(std::move(e));
  }
  const std::vector<double> payload = read_float32_payload(payload_path(header), total);
  for (const auto& e : entries) {
    ParamArray& a = m.params.add(e.name, e.shape);
    if (a.size() != e.count) throw ParseError(Kind::LengthMismatch, "layer " + e.name + " count disagrees with shape");
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(e.offset / 4), e.count, a.values.begin());
  }
  try {
    m.validate();
  } catch (const ValidationError& err) {
    throw ParseError(Kind::InvariantViolation, header.string() + ": " + err.what());
  } catch (const NumericalError& err) {
    throw ParseError(Kind::InvariantViolation, header.string() + ": " + err.what());
  }
  return m;
}

}  // namespace hdrec::nn
