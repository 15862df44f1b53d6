#ifndef TYPEIIA_MODEL_FILE_HPP
#define TYPEIIA_MODEL_FILE_HPP

/// Text format for Lie models.
///
///   # comment
///   model nil
///   generators e1 e2 e3 e4 e5 e6
///   const l = 0.9624236501192069
///   d e4 = e1^e5
///   d e1 = -l*e1^e5 + 2*e2^e3
///   omega = e1^e2 + e3^e4 + e5^e6
///   sign_convention standard
///
/// Generators without a `d` line are closed.  Coefficients are products of
/// numbers and named constants.  `sign_convention flipped` negates every
/// listed differential, for tables written with the opposite bracket sign.

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "typeiia/liegeom.hpp"

namespace typeiia {

struct ModelParseError : std::runtime_error {
  ModelParseError(int line, const std::string& what);
  /// 1-based; 0 when the problem is not tied to a line.
  int line = 0;
};

struct ModelDescription {
  std::string name;
  std::array<std::string, kDim> generators;
  std::vector<std::pair<std::string, double>> constants;
  bool flipped = false;
  LieModel model;
};

ModelDescription parse_model(std::istream& in);
ModelDescription parse_model_text(const std::string& text);
ModelDescription parse_model_file(const std::string& path);

/// Canonical rendering: one `d` line per non-closed generator with numeric
/// coefficients on sorted pairs, in the standard sign convention.
std::string normalized(const ModelDescription& m);

/// Same rendering for a model with default generator names e1..e6.
std::string normalized(const LieModel& m);

}  // namespace typeiia

#endif  // TYPEIIA_MODEL_FILE_HPP
