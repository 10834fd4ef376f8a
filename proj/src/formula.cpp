#include "drutil/formula.hpp"

#include "drutil/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace drutil {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_top_level(const std::string& s, char sep) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(trim(cur));
    return parts;
}

Term parse_term(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) throw UsageError("formula: empty term");
    const auto open = t.find('(');
    if (open == std::string::npos) return {Term::Kind::column, t, 1.0};
    if (t.back() != ')') throw UsageError("formula: malformed term '" + t + "'");
    const std::string fn = trim(t.substr(0, open));
    const std::string inner = t.substr(open + 1, t.size() - open - 2);
    if (fn == "log1p") return {Term::Kind::log1p, trim(inner), 1.0};
    if (fn == "pow") {
        const auto args = split_top_level(inner, ',');
        if (args.size() != 2) throw UsageError("formula: pow() takes (column, exponent)");
        double k = 0.0;
        const auto& a = args[1];
        auto [ptr, ec] = std::from_chars(a.data(), a.data() + a.size(), k);
        if (ec != std::errc() || ptr != a.data() + a.size()) throw UsageError("formula: bad exponent '" + a + "'");
        return {Term::Kind::power, args[0], k};
    }
    throw UsageError("formula: unsupported function '" + fn + "' (use log1p or pow)");
}

double apply_term(const Term& t, double v) {
    switch (t.kind) {
    case Term::Kind::column: return v;
    case Term::Kind::log1p: return std::log1p(v);
    case Term::Kind::power: return std::pow(v, t.exponent);
    }
    return v;
}

}  // namespace

std::string Term::label() const {
    switch (kind) {
    case Kind::column: return column;
    case Kind::log1p: return "log1p(" + column + ")";
    case Kind::power: {
        std::ostringstream os;
        os << "pow(" << column << "," << exponent << ")";
        return os.str();
    }
    }
    return column;
}

Formula Formula::parse(const std::string& text) {
    const auto tilde = text.find('~');
    if (tilde == std::string::npos || text.find('~', tilde + 1) != std::string::npos)
        throw UsageError("formula must have the form 'response ~ a + b'");
    Formula f;
    f.response = parse_term(text.substr(0, tilde));
    const std::string rhs = trim(text.substr(tilde + 1));
    if (rhs.empty()) throw UsageError("formula: no predictors");
    for (const auto& part : split_top_level(rhs, '+')) f.predictors.push_back(parse_term(part));
    return f;
}

Design build_design(const Formula& formula, const Dataset& data, const Dataset& reference) {
    const auto require = [&](const Dataset& d, const std::string& name) -> const Column& {
        if (!d.find(name)) throw InputError("unknown column '" + name + "' in formula");
        return d.column(name);
    };

    const Index n = static_cast<Index>(data.rows());
    Design out;
    std::vector<Vector> cols{Vector::Ones(n)};
    out.names.push_back("(Intercept)");

    const Column& resp = require(data, formula.response.column);
    if (resp.kind != ColumnKind::numeric)
        throw InputError("response '" + resp.name + "' must be numeric");
    out.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double v = resp.numeric[static_cast<std::size_t>(i)];
        if (std::isnan(v)) throw InputError("missing value in response '" + resp.name + "'");
        out.y(i) = apply_term(formula.response, v);
    }

    for (const auto& term : formula.predictors) {
        const Column& col = require(data, term.column);
        if (col.kind == ColumnKind::numeric) {
            Vector v(n);
            for (Index i = 0; i < n; ++i) {
                const double raw = col.numeric[static_cast<std::size_t>(i)];
                if (std::isnan(raw)) throw InputError("missing value in column '" + col.name + "'");
                v(i) = apply_term(term, raw);
            }
            cols.push_back(std::move(v));
            out.names.push_back(term.label());
            continue;
        }
        if (term.kind != Term::Kind::column)
            throw InputError("cannot transform categorical column '" + col.name + "'");
        const Column& ref = require(reference, term.column);
        if (ref.kind != ColumnKind::categorical)
            throw InputError("column '" + col.name + "' has different kinds in the two datasets");
        std::vector<std::string> levels;
        for (int code : ref.codes)
            if (code >= 0) levels.push_back(ref.levels[static_cast<std::size_t>(code)]);
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        for (std::size_t l = 1; l < levels.size(); ++l) {
            Vector v = Vector::Zero(n);
            for (Index i = 0; i < n; ++i) {
                if (col.codes[static_cast<std::size_t>(i)] < 0)
                    throw InputError("missing value in column '" + col.name + "'");
                if (col.label(static_cast<std::size_t>(i)) == levels[l]) v(i) = 1.0;
            }
            cols.push_back(std::move(v));
            out.names.push_back(col.name + "=" + levels[l]);
        }
        for (std::size_t i = 0; i < data.rows(); ++i) {
            if (col.codes[i] < 0) throw InputError("missing value in column '" + col.name + "'");
            const auto& lab = col.label(i);
            if (!std::binary_search(levels.begin(), levels.end(), lab))
                throw InputError("column '" + col.name + "': label '" + lab + "' does not occur in the observed data");
        }
    }

    out.x.resize(n, static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.x.col(static_cast<Index>(j)) = cols[j];
    return out;
}

}  // namespace drutil
