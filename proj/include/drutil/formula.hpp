#pragma once

#include "drutil/dataset.hpp"

#include <string>
#include <vector>

namespace drutil {

// One side of `y ~ a + log1p(b) + pow(c, 2)`.
struct Term {
    enum class Kind { column, log1p, power };
    Kind kind = Kind::column;
    std::string column;
    double exponent = 1.0;

    std::string label() const;
};

struct Formula {
    Term response;
    std::vector<Term> predictors;

    static Formula parse(const std::string& text);
};

struct Design {
    Matrix x;  // intercept first
    Vector y;
    std::vector<std::string> names;
};

// Categorical predictors expand to one dummy per non-reference level; the
// levels (and reference) come from `reference`, normally the observed data.
Design build_design(const Formula& formula, const Dataset& data, const Dataset& reference);

}  // namespace drutil
