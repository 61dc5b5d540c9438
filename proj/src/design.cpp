#include "mcate/design.hpp"

#include "mcate/error.hpp"

#include <sstream>

namespace mcate {

namespace {

Atom parse_atom(const std::string& token) {
  if (token == "C") return {Atom::Kind::center, {}};
  if (token == "A") return {Atom::Kind::arm, {}};
  if (token.empty() || token == "1") throw Error(ErrorKind::spec, "invalid interaction factor '" + token + "'");
  return {Atom::Kind::covariate, token};
}

std::string atom_string(const Atom& atom) {
  switch (atom.kind) {
    case Atom::Kind::center: return "C";
    case Atom::Kind::arm: return "A";
    case Atom::Kind::covariate: return atom.name;
  }
  return {};
}

// Columns generated by one atom over the selected rows.
struct Block {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
};

Block expand_atom(const Atom& atom, const TrialDataset& data, const std::vector<Eigen::Index>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Block block;
  switch (atom.kind) {
    case Atom::Kind::covariate: {
      auto j = data.covariate_index(atom.name);
      if (!j) throw Error(ErrorKind::spec, "unknown covariate '" + atom.name + "'");
      block.values.resize(n, 1);
      for (Eigen::Index k = 0; k < n; ++k) block.values(k, 0) = data.covariates(rows[k], *j);
      block.names.push_back(atom.name);
      break;
    }
    case Atom::Kind::center: {
      const int m = data.m();
      block.values = Eigen::MatrixXd::Zero(n, m - 1);
      for (Eigen::Index k = 0; k < n; ++k) {
        const int c = data.center(rows[k]);
        if (c > 1) block.values(k, c - 2) = 1.0;
      }
      for (int c = 2; c <= m; ++c) block.names.push_back("C" + std::to_string(c));
      break;
    }
    case Atom::Kind::arm: {
      const auto arms = data.arms();
      const auto levels = static_cast<Eigen::Index>(arms.size()) - 1;
      block.values = Eigen::MatrixXd::Zero(n, std::max<Eigen::Index>(levels, 0));
      for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index j = 0; j < levels; ++j) {
          if (data.arm(rows[k]) == arms[j + 1]) block.values(k, j) = 1.0;
        }
      }
      for (Eigen::Index j = 0; j < levels; ++j) block.names.push_back("A" + std::to_string(arms[j + 1]));
      break;
    }
  }
  return block;
}

// Row-wise Kronecker product of two blocks; left factor varies slowest.
Block multiply(const Block& left, const Block& right) {
  Block out;
  const auto n = left.values.rows();
  out.values.resize(n, left.values.cols() * right.values.cols());
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < left.values.cols(); ++i) {
    for (Eigen::Index j = 0; j < right.values.cols(); ++j) {
      out.values.col(col++) = left.values.col(i).cwiseProduct(right.values.col(j));
      out.names.push_back(left.names[i] + ":" + right.names[j]);
    }
  }
  return out;
}

}  // namespace

DesignSpec DesignSpec::parse(const std::vector<std::string>& tokens) {
  DesignSpec spec;
  for (const auto& raw : tokens) {
    std::string token;
    for (char ch : raw) {
      if (ch != ' ' && ch != '\t') token += ch;
    }
    if (token == "1") {
      spec.terms.push_back(Term::intercept());
    } else if (token == "C") {
      spec.terms.push_back(Term::centers());
    } else if (token == "A") {
      spec.terms.push_back(Term::arm());
    } else if (token.find(':') != std::string::npos) {
      std::vector<Atom> atoms;
      std::stringstream ss(token);
      std::string part;
      while (std::getline(ss, part, ':')) atoms.push_back(parse_atom(part));
      if (atoms.size() < 2) throw Error(ErrorKind::spec, "interaction '" + token + "' needs two factors");
      spec.terms.push_back(Term::interaction(std::move(atoms)));
    } else if (token.empty()) {
      throw Error(ErrorKind::spec, "empty design term");
    } else {
      spec.terms.push_back(Term::covariate(token));
    }
  }
  int intercepts = 0;
  for (const auto& t : spec.terms) intercepts += t.kind == Term::Kind::intercept;
  if (intercepts > 1) throw Error(ErrorKind::spec, "design spec has more than one intercept");
  return spec;
}

std::vector<std::string> DesignSpec::to_strings() const {
  std::vector<std::string> out;
  for (const auto& t : terms) {
    switch (t.kind) {
      case Term::Kind::intercept: out.emplace_back("1"); break;
      case Term::Kind::covariate: out.push_back(t.name); break;
      case Term::Kind::center_indicators: out.emplace_back("C"); break;
      case Term::Kind::arm_indicator: out.emplace_back("A"); break;
      case Term::Kind::interaction: {
        std::string s;
        for (const auto& a : t.factors) s += (s.empty() ? "" : ":") + atom_string(a);
        out.push_back(s);
        break;
      }
    }
  }
  return out;
}

bool DesignSpec::has_intercept() const {
  for (const auto& t : terms) {
    if (t.kind == Term::Kind::intercept) return true;
  }
  return false;
}

Design build_design(const DesignSpec& spec, const TrialDataset& data, std::optional<int> arm_filter) {
  int intercepts = 0;
  for (const auto& t : spec.terms) intercepts += t.kind == Term::Kind::intercept;
  if (intercepts > 1) throw Error(ErrorKind::spec, "design spec has more than one intercept");

  Design design;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (!arm_filter || data.arm(i) == *arm_filter) design.rows.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(design.rows.size());

  std::vector<Block> blocks;
  for (const auto& term : spec.terms) {
    switch (term.kind) {
      case Term::Kind::intercept:
        blocks.push_back({Eigen::MatrixXd::Ones(n, 1), {"(Intercept)"}});
        break;
      case Term::Kind::covariate:
        blocks.push_back(expand_atom({Atom::Kind::covariate, term.name}, data, design.rows));
        break;
      case Term::Kind::center_indicators:
        blocks.push_back(expand_atom({Atom::Kind::center, {}}, data, design.rows));
        break;
      case Term::Kind::arm_indicator:
        blocks.push_back(expand_atom({Atom::Kind::arm, {}}, data, design.rows));
        break;
      case Term::Kind::interaction: {
        Block product = expand_atom(term.factors.front(), data, design.rows);
        for (std::size_t f = 1; f < term.factors.size(); ++f)
          product = multiply(product, expand_atom(term.factors[f], data, design.rows));
        blocks.push_back(std::move(product));
        break;
      }
    }
  }

  Eigen::Index cols = 0;
  for (const auto& b : blocks) cols += b.values.cols();
  design.matrix.resize(n, cols);
  Eigen::Index at = 0;
  for (auto& b : blocks) {
    design.matrix.middleCols(at, b.values.cols()) = b.values;
    at += b.values.cols();
    for (auto& name : b.names) design.column_names.push_back(std::move(name));
  }
  return design;
}

DesignSpec intercept_only() { return DesignSpec{{Term::intercept()}}; }

DesignSpec main_effects(const std::vector<std::string>& covariates, bool with_centers) {
  DesignSpec spec{{Term::intercept()}};
  for (const auto& name : covariates) spec.terms.push_back(Term::covariate(name));
  if (with_centers) spec.terms.push_back(Term::centers());
  return spec;
}

}  // namespace mcate
