#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "dmdkit/dmd.hpp"

namespace dmdkit::svg {

inline constexpr double canvas = 400.0;

/// Pixel coordinates of eigenvalue z on the plot. The real axis runs left
/// to right, the imaginary axis bottom to top, centered on the canvas.
struct Layout {
  double scale;  // pixels per unit

  explicit Layout(const ComplexVector& eigenvalues) {
    double radius = 1.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) radius = std::max(radius, std::abs(eigenvalues(i)));
    scale = 0.45 * canvas / (1.1 * radius);
  }

  double x(Complex z) const { return canvas / 2 + z.real() * scale; }
  double y(Complex z) const { return canvas / 2 - z.imag() * scale; }
};

/// Unit circle, axes, and one marker per eigenvalue.
inline std::string spectrum_plot(const ComplexVector& eigenvalues) {
  const Layout layout(eigenvalues);
  const double c = canvas / 2;
  auto fmt = [](double v) { return dmdkit::detail::format_double(v); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(canvas) << "\" height=\"" << fmt(canvas)
      << "\" viewBox=\"0 0 " << fmt(canvas) << ' ' << fmt(canvas) << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "  <line class=\"axis\" x1=\"0\" y1=\"" << fmt(c) << "\" x2=\"" << fmt(canvas) << "\" y2=\"" << fmt(c)
      << "\" stroke=\"#bbbbbb\"/>\n";
  out << "  <line class=\"axis\" x1=\"" << fmt(c) << "\" y1=\"0\" x2=\"" << fmt(c) << "\" y2=\"" << fmt(canvas)
      << "\" stroke=\"#bbbbbb\"/>\n";
  out << "  <circle class=\"unit-circle\" cx=\"" << fmt(c) << "\" cy=\"" << fmt(c) << "\" r=\""
      << fmt(layout.scale) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const Complex z = eigenvalues(i);
    out << "  <circle class=\"eigenvalue\" data-re=\"" << fmt(z.real()) << "\" data-im=\"" << fmt(z.imag())
        << "\" cx=\"" << fmt(layout.x(z)) << "\" cy=\"" << fmt(layout.y(z))
        << "\" r=\"4\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace dmdkit::svg
