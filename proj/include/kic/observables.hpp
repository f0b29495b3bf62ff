#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kic/numkernel.hpp"

namespace kic {

/// One scalar observable g(x, u).
class ObservableTerm {
public:
    enum class Kind { StateIdentity, InputIdentity, Monomial };

    static ObservableTerm state(int index, std::string label = {});
    static ObservableTerm input(int index, std::string label = {});
    static ObservableTerm monomial(std::vector<int> state_powers, std::vector<int> input_powers,
                                   std::string label = {});

    Kind kind() const { return kind_; }
    const std::string& label() const { return label_; }
    /// Index of the state or input variable for identity terms.
    int index() const { return index_; }
    /// Exponents per variable. For identity terms these are filled in against
    /// the owning spec's dimensions (see ObservableSpec).
    const std::vector<int>& state_powers() const { return state_powers_; }
    const std::vector<int>& input_powers() const { return input_powers_; }

    bool uses_inputs() const;
    int degree() const;

    /// Canonical text in the CLI grammar, e.g. "x1", "u2", "x1^2*u1".
    std::string expression() const;

    /// Evaluate at one sample. Products run over variables in ascending index,
    /// states before inputs, by repeated multiplication.
    double evaluate(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const;

    /// Same exponents (and kind) regardless of label.
    bool same_function(const ObservableTerm& other) const;

    friend bool operator==(const ObservableTerm&, const ObservableTerm&) = default;

private:
    friend class ObservableSpec;
    ObservableTerm() = default;
    void bind(int n_x, int n_u);

    Kind kind_ = Kind::StateIdentity;
    int index_ = -1;
    std::vector<int> state_powers_;
    std::vector<int> input_powers_;
    std::string label_;
};

/// Ordered dictionary of observables; term order is the row order of lifted
/// matrices. Labels are unique.
class ObservableSpec {
public:
    ObservableSpec(std::vector<ObservableTerm> terms, int n_x, int n_u);

    /// x1..x{n_x}, u1..u{n_u}.
    static ObservableSpec identity(int n_x, int n_u);

    /// Parse "x1,x2,x1^2,u1" style text. Factors are x<i> or u<j> (1-based),
    /// optionally raised with ^k, joined by '*'. Labels are the trimmed term text.
    static ObservableSpec parse(const std::string& text, int n_x, int n_u);

    const std::vector<ObservableTerm>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    int n_x() const { return n_x_; }
    int n_u() const { return n_u_; }
    bool uses_inputs() const;
    std::optional<std::size_t> find(const std::string& label) const;

    std::string to_string() const;

    friend bool operator==(const ObservableSpec&, const ObservableSpec&) = default;

private:
    std::vector<ObservableTerm> terms_;
    int n_x_;
    int n_u_;
};

/// Lift states (n_x x m) and optional inputs (n_u x m) to (terms x m).
Matrix lift(const ObservableSpec& spec, const Matrix& states, const std::optional<Matrix>& inputs);

/// Time derivative of every lifted term by the product rule, given state
/// derivatives and (when any term touches inputs) input derivatives.
Matrix lift_derivative(const ObservableSpec& spec, const Matrix& states, const Matrix& state_derivs,
                       const std::optional<Matrix>& inputs = std::nullopt,
                       const std::optional<Matrix>& input_derivs = std::nullopt);

/// For each output term, its row in the lifted input matrix (matched by label).
std::vector<std::size_t> restriction_indices(const ObservableSpec& input_spec,
                                             const ObservableSpec& output_spec);

}  // namespace kic
