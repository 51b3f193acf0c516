#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hdrec/error.hpp"
#include "hdrec/types.hpp"
#include "test_util.hpp"

using namespace hdrec;

TEST(Phantom, RejectsNegativeAndNonFinite) {
  Image img(8, 8);
  img.at(3, 3) = -1e-9;
  EXPECT_THROW(Phantom{img}, ValidationError);
  img.at(3, 3) = std::nan("");
  EXPECT_THROW(Phantom{img}, ValidationError);
  img.at(3, 3) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(Phantom{img}, ValidationError);
}

TEST(Phantom, RequiresAtLeastEightByEight) {
  EXPECT_THROW(Phantom(Image(7, 8)), ShapeError);
  EXPECT_THROW(Phantom(Image(8, 7)), ShapeError);
  EXPECT_NO_THROW(Phantom(Image(8, 8)));
}

TEST(ProjectionStack, ValidatesAngles) {
  const std::vector<double> v(6, 0.5);
  EXPECT_NO_THROW(ProjectionStack(Domain::Transmission, {0.0, 1.0, 2.0}, 2, 1, v));
  EXPECT_THROW(ProjectionStack(Domain::Transmission, {0.0, 1.0, 1.0}, 2, 1, v), ValidationError);
  EXPECT_THROW(ProjectionStack(Domain::Transmission, {0.0, 2.0, 1.0}, 2, 1, v), ValidationError);
  EXPECT_THROW(ProjectionStack(Domain::Transmission, {0.0, 1.0, std::numbers::pi}, 2, 1, v), ValidationError);
  EXPECT_THROW(ProjectionStack(Domain::Transmission, {-0.1, 1.0, 2.0}, 2, 1, v), ValidationError);
}

TEST(ProjectionStack, ValidatesValueCountAndSign) {
  EXPECT_THROW(ProjectionStack(Domain::LineIntegral, {0.0, 1.0}, 3, 1, std::vector<double>(5, 0.0)), ShapeError);
  EXPECT_THROW(ProjectionStack(Domain::LineIntegral, {0.0}, 2, 1, {0.0, -1.0}), ValidationError);
  EXPECT_THROW(ProjectionStack(Domain::LineIntegral, {0.0}, 2, 1, {0.0, std::nan("")}), ValidationError);
}

TEST(ProjectionStack, TransmissionCeiling) {
  const ProjectionStack ok(Domain::Transmission, {0.0}, 2, 1, {0.0, 1.2});
  EXPECT_NO_THROW(ok.check_transmission_ceiling());
  const ProjectionStack bad(Domain::Transmission, {0.0}, 2, 1, {0.0, 1.25});
  try {
    bad.check_transmission_ceiling();
    FAIL() << "expected an invariant violation";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::InvariantViolation);
  }
  const ProjectionStack lines(Domain::LineIntegral, {0.0}, 2, 1, {0.0, 7.0});
  EXPECT_NO_THROW(lines.check_transmission_ceiling());
}

TEST(ProjectionStack, ProjectionImagesAndSinograms) {
  std::vector<double> v(3 * 2 * 4);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const ProjectionStack s(Domain::LineIntegral, {0.0, 0.5, 1.0}, 4, 2, v);
  const Image p = s.projection_image(1);
  EXPECT_EQ(p.width, 4);
  EXPECT_EQ(p.height, 2);
  EXPECT_EQ(p.at(3, 1), s.at(1, 1, 3));
  const ProjectionStack row1 = s.sinogram(1);
  EXPECT_EQ(row1.n_rows(), 1);
  EXPECT_EQ(row1.at(2, 0, 0), s.at(2, 1, 0));
  std::vector<Image> images{s.projection_image(0), s.projection_image(1), s.projection_image(2)};
  EXPECT_EQ(stack_from_images(Domain::LineIntegral, s.angles(), images), s);
}

TEST(Domain, ParsesKnownTagsOnly) {
  EXPECT_EQ(parse_domain("Transmission"), Domain::Transmission);
  EXPECT_EQ(parse_domain("LineIntegral"), Domain::LineIntegral);
  EXPECT_EQ(parse_domain(to_string(Domain::LineIntegral)), Domain::LineIntegral);
  try {
    parse_domain("Absorbance");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::UnknownDomain);
  }
}

TEST(UniformAngles, EvenlySpacedOverHalfTurn) {
  const auto a = uniform_angles(8);
  ASSERT_EQ(a.size(), 8u);
  for (int k = 0; k < 8; ++k) EXPECT_DOUBLE_EQ(a[k], k * std::numbers::pi / 8);
  EXPECT_THROW(uniform_angles(0), ParameterError);
}

TEST(QualityReport, AggregatesMatchRecomputation) {
  const auto ssims = test::random_values(9, 11, -0.2, 1.0);
  const auto psnrs = test::random_values(9, 12, 10.0, 50.0);
  std::vector<QualityItem> items;
  for (int i = 0; i < 9; ++i) items.push_back({i, ssims[i], psnrs[i]});
  const QualityReport r = QualityReport::from_items(items);

  auto mean = [](const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
  };
  auto pstd = [&](const std::vector<double>& v) {
    const double m = mean(v);
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(static_cast<double>(s / v.size()));
  };
  EXPECT_NEAR(r.mean_ssim, mean(ssims), 1e-12 * std::abs(mean(ssims)));
  EXPECT_NEAR(r.std_ssim, pstd(ssims), 1e-12 * pstd(ssims));
  EXPECT_NEAR(r.mean_psnr, mean(psnrs), 1e-12 * mean(psnrs));
  EXPECT_NEAR(r.std_psnr, pstd(psnrs), 1e-12 * pstd(psnrs));
}

TEST(AcquisitionScheme, ValidateCatchesInconsistency) {
  AcquisitionScheme s{{5000, 100, 100}, {0}, 5000, 100};
  EXPECT_NO_THROW(s.validate());
  s.b0_per_angle[1] = 5000;
  EXPECT_THROW(s.validate(), ParameterError);
  AcquisitionScheme inverted{{100, 100}, {}, 50, 100};
  EXPECT_THROW(inverted.validate(), ParameterError);
}
