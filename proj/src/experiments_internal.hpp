#pragma once

#include "distgeom/experiments.hpp"

#include <string>

namespace distgeom::detail {

Check make_check(std::string name, bool passed, nlohmann::json detail, bool gating = true);

/// Config-level association options ([association] and [pairing]).
AssociationOptions association_options(const Config& cfg);
EmbeddingQuadrature embedding_quadrature(const Config& cfg);

/// 2D corpus fields by name; `chart` is the cube the fields live on.
RoughTensorField corpus_rough(const std::string& name, const Chart& chart);
/// Closed-form smooth corpus fields.
TensorField corpus_smooth(const std::string& name, const Chart& chart);
/// Vector fields by name: "unit_x", "rotation", "shear_flow".
VectorField corpus_vector(const std::string& name, int dim);

/// Lie derivative of a weight-one tensor density.
TestDensity density_lie_derivative(const TestDensity& psi, const VectorField& x);

/// Box of half-width r around the origin in n dimensions.
Box centered_box(int n, double r);

std::string csv_number(double v);

/// Record skeleton filled from the config.
RunRecord start_record(const Config& cfg, const std::string& experiment, const EpsNet& net);

}  // namespace distgeom::detail
