#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hdrec/types.hpp"

namespace hdrec {

// Stack/image files are a key=value text header plus a sibling payload of
// little-endian float32 values (`<stem>.raw` next to the header).

/// Payload path paired with a header path: same stem, extension `.raw`.
std::filesystem::path payload_path(const std::filesystem::path& header);

/// Writes header (magic=HDREC1) and payload. Values are narrowed to float32;
/// transmission values are clamped to [0, kTransmissionMax].
void write_stack(const ProjectionStack& stack, const std::filesystem::path& header);
ProjectionStack read_stack(const std::filesystem::path& header);

/// Writes header (magic=HDRECP) and payload. Used for phantoms and reconstructions.
void write_image(const Image& image, const std::filesystem::path& header);
Image read_image(const std::filesystem::path& header);
Phantom read_phantom(const std::filesystem::path& header);

void write_report_csv(const QualityReport& report, const std::filesystem::path& path);
QualityReport read_report_csv(const std::filesystem::path& path);

void write_scheme_csv(const AcquisitionScheme& scheme, const std::filesystem::path& path);
/// Reconstructs b0_normal/b0_low and normal indices from the per-angle column.
AcquisitionScheme read_scheme_csv(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

/// key=value header parsing shared with the checkpoint format.
struct Header {
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
};

Header read_header(const std::filesystem::path& path, const std::string& expected_magic);

void write_float32_payload(const std::filesystem::path& path, const std::vector<double>& values);
std::vector<double> read_float32_payload(const std::filesystem::path& path, std::size_t expected_count);

}  // namespace hdrec
