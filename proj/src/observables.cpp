#include "kic/observables.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "kic/errors.hpp"

namespace kic {

namespace {

std::string monomial_text(const std::vector<int>& state_powers, const std::vector<int>& input_powers) {
    std::string out;
    auto emit = [&](char var, const std::vector<int>& powers) {
        for (std::size_t i = 0; i < powers.size(); ++i) {
            if (powers[i] == 0) continue;
            if (!out.empty()) out += '*';
            out += var + std::to_string(i + 1);
            if (powers[i] > 1) out += '^' + std::to_string(powers[i]);
        }
    };
    emit('x', state_powers);
    emit('u', input_powers);
    return out;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

int parse_positive(const std::string& digits, const std::string& context) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size() || value <= 0)
        throw SpecError("undefined observable term '" + context + "'");
    return value;
}

}  // namespace

ObservableTerm ObservableTerm::state(int index, std::string label) {
    if (index < 0) throw SpecError("state index must be nonnegative");
    ObservableTerm t;
    t.kind_ = Kind::StateIdentity;
    t.index_ = index;
    t.label_ = label.empty() ? "x" + std::to_string(index + 1) : std::move(label);
    return t;
}

ObservableTerm ObservableTerm::input(int index, std::string label) {
    if (index < 0) throw SpecError("input index must be nonnegative");
    ObservableTerm t;
    t.kind_ = Kind::InputIdentity;
    t.index_ = index;
    t.label_ = label.empty() ? "u" + std::to_string(index + 1) : std::move(label);
    return t;
}

ObservableTerm ObservableTerm::monomial(std::vector<int> state_powers, std::vector<int> input_powers,
                                       std::string label) {
    ObservableTerm t;
    t.kind_ = Kind::Monomial;
    t.state_powers_ = std::move(state_powers);
    t.input_powers_ = std::move(input_powers);
    for (int p : t.state_powers_)
        if (p < 0) throw SpecError("negative exponent in monomial");
    for (int p : t.input_powers_)
        if (p < 0) throw SpecError("negative exponent in monomial");
    if (t.degree() < 1) throw SpecError("monomial must have total degree >= 1");
    t.label_ = label.empty() ? monomial_text(t.state_powers_, t.input_powers_) : std::move(label);
    return t;
}

void ObservableTerm::bind(int n_x, int n_u) {
    switch (kind_) {
        case Kind::StateIdentity:
            if (index_ >= n_x)
                throw SpecError("term '" + label_ + "' refers to state " + std::to_string(index_ + 1) +
                                " but there are " + std::to_string(n_x));
            state_powers_.assign(static_cast<std::size_t>(n_x), 0);
            input_powers_.assign(static_cast<std::size_t>(n_u), 0);
            state_powers_[static_cast<std::size_t>(index_)] = 1;
            break;
        case Kind::InputIdentity:
            if (index_ >= n_u)
                throw SpecError("term '" + label_ + "' refers to input " + std::to_string(index_ + 1) +
                                " but there are " + std::to_string(n_u));
            state_powers_.assign(static_cast<std::size_t>(n_x), 0);
            input_powers_.assign(static_cast<std::size_t>(n_u), 0);
            input_powers_[static_cast<std::size_t>(index_)] = 1;
            break;
        case Kind::Monomial:
            if (state_powers_.size() != static_cast<std::size_t>(n_x) ||
                input_powers_.size() != static_cast<std::size_t>(n_u))
                throw SpecError("monomial '" + label_ + "' has exponent lists of the wrong length");
            break;
    }
}

bool ObservableTerm::uses_inputs() const {
    if (kind_ == Kind::InputIdentity) return true;
    for (int p : input_powers_)
        if (p > 0) return true;
    return false;
}

int ObservableTerm::degree() const {
    if (kind_ != Kind::Monomial) return 1;
    int d = 0;
    for (int p : state_powers_) d += p;
    for (int p : input_powers_) d += p;
    return d;
}

std::string ObservableTerm::expression() const {
    switch (kind_) {
        case Kind::StateIdentity:
            return "x" + std::to_string(index_ + 1);
        case Kind::InputIdentity:
            return "u" + std::to_string(index_ + 1);
        case Kind::Monomial:
            return monomial_text(state_powers_, input_powers_);
    }
    return {};
}

double ObservableTerm::evaluate(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const {
    switch (kind_) {
        case Kind::StateIdentity:
            return x[index_];
        case Kind::InputIdentity:
            return u[index_];
        case Kind::Monomial:
            break;
    }
    double value = 1.0;
    for (std::size_t i = 0; i < state_powers_.size(); ++i)
        for (int p = 0; p < state_powers_[i]; ++p) value *= x[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < input_powers_.size(); ++j)
        for (int p = 0; p < input_powers_[j]; ++p) value *= u[static_cast<Eigen::Index>(j)];
    return value;
}

bool ObservableTerm::same_function(const ObservableTerm& other) const {
    return state_powers_ == other.state_powers_ && input_powers_ == other.input_powers_;
}

// ---------------------------------------------------------------------------

ObservableSpec::ObservableSpec(std::vector<ObservableTerm> terms, int n_x, int n_u)
    : terms_(std::move(terms)), n_x_(n_x), n_u_(n_u) {
    if (n_x < 0 || n_u < 0) throw SpecError("negative dimension in observable spec");
    std::set<std::string> seen;
    for (auto& t : terms_) {
        t.bind(n_x, n_u);
        if (!seen.insert(t.label()).second) throw SpecError("duplicate observable label '" + t.label() + "'");
    }
}

ObservableSpec ObservableSpec::identity(int n_x, int n_u) {
    std::vector<ObservableTerm> terms;
    for (int i = 0; i < n_x; ++i) terms.push_back(ObservableTerm::state(i));
    for (int j = 0; j < n_u; ++j) terms.push_back(ObservableTerm::input(j));
    return ObservableSpec(std::move(terms), n_x, n_u);
}

ObservableSpec ObservableSpec::parse(const std::string& text, int n_x, int n_u) {
    std::vector<ObservableTerm> terms;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw, ',')) {
        const std::string term = trim(raw);
        if (term.empty()) throw SpecError("empty observable term in '" + text + "'");

        std::vector<int> sp(static_cast<std::size_t>(n_x), 0), ip(static_cast<std::size_t>(n_u), 0);
        std::istringstream factors(term);
        std::string factor;
        while (std::getline(factors, factor, '*')) {
            factor = trim(factor);
            if (factor.size() < 2 || (factor[0] != 'x' && factor[0] != 'u'))
                throw SpecError("undefined observable term '" + term + "'");
            const auto caret = factor.find('^');
            const int var = parse_positive(factor.substr(1, caret == std::string::npos ? std::string::npos : caret - 1), term);
            const int power = caret == std::string::npos ? 1 : parse_positive(factor.substr(caret + 1), term);
            auto& powers = factor[0] == 'x' ? sp : ip;
            if (var > static_cast<int>(powers.size()))
                throw SpecError("term '" + term + "' refers to " + factor.substr(0, caret) + " but only " +
                                std::to_string(powers.size()) + (factor[0] == 'x' ? " states" : " inputs") +
                                " exist");
            powers[static_cast<std::size_t>(var - 1)] += power;
        }

        int degree = 0, single = -1;
        bool single_is_state = true;
        for (std::size_t i = 0; i < sp.size(); ++i)
            if (sp[i]) degree += sp[i], single = static_cast<int>(i);
        for (std::size_t j = 0; j < ip.size(); ++j)
            if (ip[j]) degree += ip[j], single = static_cast<int>(j), single_is_state = false;

        if (degree == 1)
            terms.push_back(single_is_state ? ObservableTerm::state(single, term) : ObservableTerm::input(single, term));
        else
            terms.push_back(ObservableTerm::monomial(std::move(sp), std::move(ip), term));
    }
    if (terms.empty()) throw SpecError("observable spec is empty");
    return ObservableSpec(std::move(terms), n_x, n_u);
}

bool ObservableSpec::uses_inputs() const {
    for (const auto& t : terms_)
        if (t.uses_inputs()) return true;
    return false;
}

std::optional<std::size_t> ObservableSpec::find(const std::string& label) const {
    for (std::size_t i = 0; i < terms_.size(); ++i)
        if (terms_[i].label() == label) return i;
    return std::nullopt;
}

std::string ObservableSpec::to_string() const {
    std::string out;
    for (const auto& t : terms_) {
        if (!out.empty()) out += ',';
        out += t.label();
    }
    return out;
}

// ---------------------------------------------------------------------------

Matrix lift(const ObservableSpec& spec, const Matrix& states, const std::optional<Matrix>& inputs) {
    if (states.rows() != spec.n_x())
        throw DimensionError("state matrix has " + std::to_string(states.rows()) + " rows, spec expects " +
                             std::to_string(spec.n_x()));
    if (spec.uses_inputs() && !inputs) throw MissingInputError("observable spec uses inputs but none were given");
    if (inputs && (inputs->rows() != spec.n_u() || inputs->cols() != states.cols()))
        throw DimensionError("input matrix shape does not match the spec and states");

    const Vector no_inputs = Vector::Zero(spec.n_u());
    Matrix out(static_cast<Eigen::Index>(spec.size()), states.cols());
    for (Eigen::Index k = 0; k < states.cols(); ++k) {
        const Vector x = states.col(k);
        const Vector u = inputs ? Vector(inputs->col(k)) : no_inputs;
        for (std::size_t r = 0; r < spec.size(); ++r) out(static_cast<Eigen::Index>(r), k) = spec.terms()[r].evaluate(x, u);
    }
    return out;
}

Matrix lift_derivative(const ObservableSpec& spec, const Matrix& states, const Matrix& state_derivs,
                       const std::optional<Matrix>& inputs, const std::optional<Matrix>& input_derivs) {
    if (states.rows() != spec.n_x() || state_derivs.rows() != states.rows() || state_derivs.cols() != states.cols())
        throw DimensionError("state derivative matrix shape does not match the states");
    if (spec.uses_inputs() && (!inputs || !input_derivs))
        throw MissingInputError("observable spec uses inputs; inputs and their derivatives are required");

    const auto n_x = static_cast<std::size_t>(spec.n_x());
    const auto n_u = static_cast<std::size_t>(spec.n_u());
    Matrix out(static_cast<Eigen::Index>(spec.size()), states.cols());
    for (Eigen::Index k = 0; k < states.cols(); ++k) {
        // Variables in one list: states then inputs.
        std::vector<double> value(n_x + n_u, 0.0), rate(n_x + n_u, 0.0);
        for (std::size_t i = 0; i < n_x; ++i) {
            value[i] = states(static_cast<Eigen::Index>(i), k);
            rate[i] = state_derivs(static_cast<Eigen::Index>(i), k);
        }
        if (inputs && input_derivs) {
            for (std::size_t j = 0; j < n_u; ++j) {
                value[n_x + j] = (*inputs)(static_cast<Eigen::Index>(j), k);
                rate[n_x + j] = (*input_derivs)(static_cast<Eigen::Index>(j), k);
            }
        }
        for (std::size_t r = 0; r < spec.size(); ++r) {
            const auto& term = spec.terms()[r];
            std::vector<int> powers(term.state_powers());
            powers.insert(powers.end(), term.input_powers().begin(), term.input_powers().end());

            double total = 0.0;
            for (std::size_t v = 0; v < powers.size(); ++v) {
                if (powers[v] == 0) continue;
                double product = static_cast<double>(powers[v]) * rate[v];
                for (std::size_t w = 0; w < powers.size(); ++w) {
                    const int p = w == v ? powers[w] - 1 : powers[w];
                    for (int e = 0; e < p; ++e) product *= value[w];
                }
                total += product;
            }
            out(static_cast<Eigen::Index>(r), k) = total;
        }
    }
    return out;
}

std::vector<std::size_t> restriction_indices(const ObservableSpec& input_spec, const ObservableSpec& output_spec) {
    std::vector<std::size_t> map;
    map.reserve(output_spec.size());
    for (const auto& term : output_spec.terms()) {
        const auto at = input_spec.find(term.label());
        if (!at) throw SpecError("output term '" + term.label() + "' is not in the input dictionary");
        if (!input_spec.terms()[*at].same_function(term))
            throw SpecError("output term '" + term.label() + "' differs from the input term of the same label");
        map.push_back(*at);
    }
    return map;
}

}  // namespace kic
