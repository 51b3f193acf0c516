#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hdrec/error.hpp"
#include "hdrec/io.hpp"
#include "hdrec/pipeline.hpp"

namespace hdrec {
namespace fs = std::filesystem;

namespace {

constexpr const char* kCsvHeader = "series,n_pairs,b0_low,total_photons,proj_ssim,proj_psnr,recon_ssim";
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace

std::string curves_svg(const std::vector<SweepPoint>& points) {
  if (points.empty()) throw ParameterError("no sweep points to plot");
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 30, B = 55;
  double xmin = std::log10(points.front().total_photons), xmax = xmin;
  double ymin = points.front().proj_ssim, ymax = ymin;
  for (const auto& p : points) {
    if (!(p.total_photons > 0.0)) throw ParameterError("total_photons must be positive on a log axis");
    xmin = std::min(xmin, std::log10(p.total_photons));
    xmax = std::max(xmax, std::log10(p.total_photons));
    ymin = std::min(ymin, p.proj_ssim);
    ymax = std::max(ymax, p.proj_ssim);
  }
  xmin = std::floor(xmin);
  xmax = std::max(std::ceil(xmax), xmin + 1);
  if (ymax - ymin < 1e-6) {
    ymin -= 0.05;
    ymax += 0.05;
  }
  auto sx = [&](double photons) { return L + (std::log10(photons) - xmin) / (xmax - xmin) * (W - L - R); };
  auto sy = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };

  std::map<std::string, std::vector<const SweepPoint*>> series;
  for (const auto& p : points) series[p.series].push_back(&p);

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(xmin); e <= static_cast<int>(xmax); ++e) {
    const double x = sx(std::pow(10.0, e));
    s << "<line x1=\"" << fixed(x) << "\" y1=\"" << H - B << "\" x2=\"" << fixed(x) << "\" y2=\"" << H - B + 5
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fixed(x) << "\" y=\"" << H - B + 20 << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = ymin + (ymax - ymin) * k / 4.0;
    s << "<text x=\"" << L - 8 << "\" y=\"" << fixed(sy(v) + 4) << "\" text-anchor=\"end\">" << fixed(v, 3)
      << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">total photons</text>\n";
  s << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (T + H - B) / 2 << ")\">projection SSIM</text>\n";

  int idx = 0;
  for (const auto& [name, pts] : series) {
    const std::string colour = name == "uniform" ? "black" : kPalette[idx++ % std::size(kPalette)];
    if (pts.size() > 1) {
      s << "<polyline class=\"series\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        s << (i ? " " : "") << fixed(sx(pts[i]->total_photons)) << ',' << fixed(sy(pts[i]->proj_ssim));
      }
      s << "\"/>\n";
    }
    for (const auto* p : pts) {
      s << "<circle class=\"marker\" cx=\"" << fixed(sx(p->total_photons)) << "\" cy=\"" << fixed(sy(p->proj_ssim))
        << "\" r=\"3.5\" fill=\"" << colour << "\"/>\n";
    }
    const double ly = T + 18.0 * std::distance(series.begin(), series.find(name));
    s << "<rect x=\"" << W - R + 15 << "\" y=\"" << fixed(ly - 8) << "\" width=\"12\" height=\"3\" fill=\"" << colour
      << "\"/>\n";
    s << "<text x=\"" << W - R + 32 << "\" y=\"" << fixed(ly) << "\">" << name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void emit_curves(const std::vector<SweepPoint>& points, const fs::path& stem) {
  if (points.empty()) throw ParameterError("no sweep points to emit");
  fs::path csv = stem, svg = stem;
  csv += ".csv";
  svg += ".svg";
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw ParseError(ParseError::Kind::Io, "cannot write " + csv.string());
    out << kCsvHeader << '\n';
    for (const auto& p : points) {
      out << p.series << ',' << p.n_pairs << ',' << format_double(p.b0_low) << ',' << format_double(p.total_photons)
          << ',' << format_double(p.proj_ssim) << ',' << format_double(p.proj_psnr) << ','
          << format_double(p.recon_ssim) << '\n';
    }
  }
  std::ofstream out(svg, std::ios::binary);
  if (!out) throw ParseError(ParseError::Kind::Io, "cannot write " + svg.string());
  out << curves_svg(points);
}

std::vector<SweepPoint> read_curves_csv(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw ParseError(ParseError::Kind::Io, "cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != kCsvHeader) throw ParseError(ParseError::Kind::MalformedHeader, "unexpected sweep CSV header");
  std::vector<SweepPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw ParseError(ParseError::Kind::MalformedHeader, "bad sweep row: " + line);
    SweepPoint p;
    p.series = f[0];
    p.n_pairs = std::stoi(f[1]);
    p.b0_low = parse_double(f[2]);
    p.total_photons = parse_double(f[3]);
    p.proj_ssim = parse_double(f[4]);
    p.proj_psnr = parse_double(f[5]);
    p.recon_ssim = parse_double(f[6]);
    p.baseline = p.series == "uniform";
    out.push_back(p);
  }
  return out;
}

}  // namespace hdrec
