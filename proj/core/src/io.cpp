#include "hdrec/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hdrec/error.hpp"

namespace hdrec {

namespace fs = std::filesystem;

namespace {

using Kind = ParseError::Kind;

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(Kind::Io, "cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError(Kind::MalformedHeader, "not a number: '" + text + "'");
  return v;
}

fs::path payload_path(const fs::path& header) {
  fs::path p = header;
  p.replace_extension(".raw");
  return p;
}

bool Header::has(const std::string& key) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& Header::get(const std::string& key) const {
  for (const auto& e : entries) {
    if (e.first == key) return e.second;
  }
  throw ParseError(Kind::MalformedHeader, "header is missing key '" + key + "'");
}

int Header::get_int(const std::string& key) const {
  const std::string& s = get(key);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(Kind::MalformedHeader, "key '" + key + "' is not an integer: '" + s + "'");
  }
  return v;
}

double Header::get_double(const std::string& key) const { return parse_double(get(key)); }

Header read_header(const fs::path& path, const std::string& expected_magic) {
  std::ifstream in(path);
  if (!in) throw ParseError(Kind::Io, "cannot open " + path.string());
  Header h;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(Kind::MalformedHeader, "header line without '=': " + line);
    h.entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  if (h.entries.empty() || h.entries.front().first != "magic" || h.entries.front().second != expected_magic) {
    throw ParseError(Kind::MalformedHeader, path.string() + ": expected magic=" + expected_magic);
  }
  return h;
}

void write_float32_payload(const fs::path& path, const std::vector<double>& values) {
  std::vector<std::uint32_t> words(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    words[i] = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  }
  auto out = open_out(path);
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (!out) throw ParseError(Kind::Io, "write failed: " + path.string());
}

std::vector<double> read_float32_payload(const fs::path& path, std::size_t expected_count) {
  std::error_code ec;
  const auto bytes = fs::file_size(path, ec);
  if (ec) throw ParseError(Kind::Io, "cannot stat payload " + path.string());
  if (bytes != expected_count * 4) {
    throw ParseError(Kind::LengthMismatch, path.string() + ": payload has " + std::to_string(bytes) +
                                               " bytes, header implies " + std::to_string(expected_count * 4));
  }
  std::ifstream in(path, std::ios::binary);
  std::vector<std::uint32_t> words(expected_count);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw ParseError(Kind::Io, "read failed: " + path.string());
  std::vector<double> values(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) values[i] = std::bit_cast<float>(to_little(words[i]));
  return values;
}

void write_stack(const ProjectionStack& stack, const fs::path& header) {
  {
    auto out = open_out(header);
    out << "magic=HDREC1\n";
    out << "domain=" << to_string(stack.domain()) << "\n";
    out << "n_angles=" << stack.n_angles() << "\n";
    out << "n_det=" << stack.n_det() << "\n";
    if (stack.n_rows() != 1) out << "n_rows=" << stack.n_rows() << "\n";
    out << "angles=";
    for (int a = 0; a < stack.n_angles(); ++a) out << (a ? "," : "") << format_double(stack.angles()[a]);
    out << "\n";
  }
  std::vector<double> values = stack.values();
  if (stack.domain() == Domain::Transmission) {
    for (double& v : values) v = std::clamp(v, 0.0, kTransmissionMax);
  }
  write_float32_payload(payload_path(header), values);
}

ProjectionStack read_stack(const fs::path& header) {
  const Header h = read_header(header, "HDREC1");
  const Domain domain = parse_domain(h.get("domain"));
  const int n_angles = h.get_int("n_angles");
  const int n_det = h.get_int("n_det");
  const int n_rows = h.has("n_rows") ? h.get_int("n_rows") : 1;
  if (n_angles <= 0 || n_det <= 0 || n_rows <= 0) throw ParseError(Kind::MalformedHeader, "non-positive dimension");
  std::vector<double> angles;
  for (const auto& s : split(h.get("angles"), ',')) angles.push_back(parse_double(s));
  if (static_cast<int>(angles.size()) != n_angles) {
    throw ParseError(Kind::MalformedHeader, "angle list has " + std::to_string(angles.size()) + " entries, n_angles=" +
                                                std::to_string(n_angles));
  }
  auto values = read_float32_payload(payload_path(header),
                                     static_cast<std::size_t>(n_angles) * static_cast<std::size_t>(n_rows) * n_det);
  try {
    ProjectionStack stack(domain, std::move(angles), n_det, n_rows, std::move(values));
    stack.check_transmission_ceiling();
    return stack;
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(Kind::InvariantViolation, header.string() + ": " + e.what());
  }
}

void write_image(const Image& image, const fs::path& header) {
  {
    auto out = open_out(header);
    out << "magic=HDRECP\n";
    out << "width=" << image.width << "\n";
    out << "height=" << image.height << "\n";
    if (image.depth != 1) out << "depth=" << image.depth << "\n";
  }
  write_float32_payload(payload_path(header), image.values);
}

Image read_image(const fs::path& header) {
  const Header h = read_header(header, "HDRECP");
  const int w = h.get_int("width");
  const int ht = h.get_int("height");
  const int d = h.has("depth") ? h.get_int("depth") : 1;
  if (w <= 0 || ht <= 0 || d <= 0) throw ParseError(Kind::MalformedHeader, "non-positive dimension");
  auto values = read_float32_payload(payload_path(header), static_cast<std::size_t>(w) * ht * d);
  return Image(w, ht, d, std::move(values));
}

Phantom read_phantom(const fs::path& header) {
  Image img = read_image(header);
  try {
    return Phantom(std::move(img));
  } catch (const ValidationError& e) {
    throw ParseError(Kind::InvariantViolation, header.string() + ": " + e.what());
  }
}

void write_report_csv(const QualityReport& report, const fs::path& path) {
  auto out = open_out(path);
  out << "index,ssim,psnr\n";
  for (const auto& it : report.per_item) {
    out << it.index << "," << format_double(it.ssim) << "," << format_double(it.psnr) << "\n";
  }
}

QualityReport read_report_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(Kind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "index,ssim,psnr") throw ParseError(Kind::MalformedHeader, "bad report header");
  std::vector<QualityItem> items;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw ParseError(Kind::MalformedHeader, "bad report row: " + line);
    items.push_back({static_cast<int>(parse_double(f[0])), parse_double(f[1]), parse_double(f[2])});
  }
  return QualityReport::from_items(std::move(items));
}

void write_scheme_csv(const AcquisitionScheme& scheme, const fs::path& path) {
  auto out = open_out(path);
  out << "angle_index,b0\n";
  for (int a = 0; a < scheme.n_angles(); ++a) out << a << "," << format_double(scheme.b0_per_angle[a]) << "\n";
}

AcquisitionScheme read_scheme_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(Kind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "angle_index,b0") throw ParseError(Kind::MalformedHeader, "bad scheme header");
  AcquisitionScheme s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 2 || static_cast<int>(parse_double(f[0])) != static_cast<int>(s.b0_per_angle.size())) {
      throw ParseError(Kind::MalformedHeader, "bad scheme row: " + line);
    }
    s.b0_per_angle.push_back(parse_double(f[1]));
  }
  if (s.b0_per_angle.empty()) throw ParseError(Kind::MalformedHeader, "empty scheme");
  s.b0_low = *std::min_element(s.b0_per_angle.begin(), s.b0_per_angle.end());
  s.b0_normal = *std::max_element(s.b0_per_angle.begin(), s.b0_per_angle.end());
  if (s.b0_normal > s.b0_low) {
    for (int a = 0; a < s.n_angles(); ++a) {
      if (s.b0_per_angle[a] == s.b0_normal) s.normal_indices.push_back(a);
    }
  }
  s.validate();
  return s;
}

}  // namespace hdrec
