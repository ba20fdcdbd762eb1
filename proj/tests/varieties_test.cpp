#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "attain/hypermatrix.hpp"
#include "attain/rng.hpp"
#include "attain/tensor_ops.hpp"
#include "attain/varieties.hpp"
#include "attain/witness_lab.hpp"

using namespace attain;

namespace {

Eigen::VectorXcd unit(std::size_t n, std::size_t k) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
    v(static_cast<Eigen::Index>(k)) = Cx(1.0, 0.0);
    return v;
}

Eigen::VectorXcd random_ambient(std::size_t n, Field f, CounterRng& rng) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = f == Field::Real ? Cx(rng.gaussian(), 0.0) : rng.cgaussian();
    }
    return v;
}

using VecGroups = std::vector<std::vector<Eigen::VectorXcd>>;

VecGroups random_groups(const StructuredSpec& spec, Field f, CounterRng& rng) {
    VecGroups out;
    for (const GroupSpec& g : spec.groups) {
        std::vector<Eigen::VectorXcd> slots;
        for (std::size_t j = 0; j < g.arity; ++j) {
            slots.push_back(random_ambient(spec.ambient_dim, f, rng));
        }
        out.push_back(std::move(slots));
    }
    return out;
}

StructuredSpec make_spec(std::vector<GroupSpec> groups, std::size_t n) {
    StructuredSpec s;
    s.groups = std::move(groups);
    s.ambient_dim = n;
    return s;
}

// cycles through a family of spec shapes so property loops cover plain
// products, powers, symmetrized and wedge groups, and mixtures
StructuredSpec spec_family(std::size_t i) {
    switch (i % 6) {
        case 0: return make_spec({{GroupOp::Sym, 1, 1}, {GroupOp::Sym, 1, 1}, {GroupOp::Sym, 1, 1}}, 2);
        case 1: return make_spec({{GroupOp::Sym, 1, 3}}, 2);
        case 2: return make_spec({{GroupOp::Sym, 3, 1}}, 3);
        case 3: return make_spec({{GroupOp::Alt, 2, 1}}, 3);
        case 4: return make_spec({{GroupOp::Sym, 1, 2}, {GroupOp::Sym, 1, 1}}, 2);
        default: return make_spec({{GroupOp::Alt, 2, 1}, {GroupOp::Sym, 1, 1}}, 3);
    }
}

TangentWitness make_witness(const StructuredSpec& spec, Field f, CounterRng& rng) {
    TangentWitness w;
    w.spec = spec;
    w.field = f;
    w.base = random_groups(spec, f, rng);
    w.perturb = random_groups(spec, f, rng);
    return w;
}

Hypermatrix point_at(const TangentWitness& w, double t) {
    VecGroups shifted = w.base;
    for (std::size_t g = 0; g < shifted.size(); ++g) {
        for (std::size_t j = 0; j < shifted[g].size(); ++j) {
            shifted[g][j] += t * w.perturb[g][j];
        }
    }
    return structured_point(w.spec, w.field, shifted);
}

}  // namespace

TEST_CASE("power of a single vector reproduces the cube") {
    const StructuredSpec spec = make_spec({{GroupOp::Sym, 1, 3}}, 2);
    const Hypermatrix p = structured_point(spec, Field::Real, {{unit(2, 0)}});
    Hypermatrix want({2, 2, 2}, Field::Real);
    want[0] = Cx(1.0, 0.0);
    CHECK(max_abs_diff(p, want) == 0.0);
}

TEST_CASE("wedge of two unit vectors is the signed half difference") {
    const StructuredSpec spec = make_spec({{GroupOp::Alt, 2, 1}}, 2);
    const Hypermatrix p = structured_point(spec, Field::Real, {{unit(2, 0), unit(2, 1)}});
    Hypermatrix want({2, 2}, Field::Real);
    want[1] = Cx(0.5, 0.0);   // (0,1)
    want[2] = Cx(-0.5, 0.0);  // (1,0)
    CHECK(max_abs_diff(p, want) <= 1e-15);
}

TEST_CASE("squared group times a second group is the plain tensor product") {
    CounterRng rng(21);
    const StructuredSpec spec = make_spec({{GroupOp::Sym, 1, 2}, {GroupOp::Sym, 1, 1}}, 2);
    const Eigen::VectorXcd v1 = random_ambient(2, Field::Complex, rng);
    const Eigen::VectorXcd v2 = random_ambient(2, Field::Complex, rng);
    const Hypermatrix p = structured_point(spec, Field::Complex, {{v1}, {v2}});
    std::vector<Cx> d1(v1.data(), v1.data() + 2);
    std::vector<Cx> d2(v2.data(), v2.data() + 2);
    const Hypermatrix want = outer({Hypermatrix::vector(d1), Hypermatrix::vector(d1),
                                    Hypermatrix::vector(d2)});
    CHECK(max_abs_diff(p, want) <= 1e-12 * want.max_abs());
}

TEST_CASE("structured point validates layout") {
    const StructuredSpec spec = make_spec({{GroupOp::Sym, 2, 1}}, 3);
    CHECK_THROWS_AS(structured_point(spec, Field::Real, {{unit(3, 0)}}), std::invalid_argument);
    CHECK_THROWS_AS(structured_point(spec, Field::Real, {{unit(2, 0), unit(2, 1)}}),
                    std::invalid_argument);
    const StructuredSpec bad = make_spec({{GroupOp::Alt, 4, 1}}, 3);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("tangent of a plain cube point is the three slot replacements") {
    const StructuredSpec spec =
        make_spec({{GroupOp::Sym, 1, 1}, {GroupOp::Sym, 1, 1}, {GroupOp::Sym, 1, 1}}, 2);
    TangentWitness w;
    w.spec = spec;
    w.field = Field::Real;
    w.base = {{unit(2, 0)}, {unit(2, 0)}, {unit(2, 0)}};
    w.perturb = {{unit(2, 1)}, {unit(2, 1)}, {unit(2, 1)}};
    const Hypermatrix tangent = structured_tangent(w);

    Hypermatrix want({2, 2, 2}, Field::Real);
    want.at(std::vector<std::size_t>{1, 0, 0}) = Cx(1.0, 0.0);
    want.at(std::vector<std::size_t>{0, 1, 0}) = Cx(1.0, 0.0);
    want.at(std::vector<std::size_t>{0, 0, 1}) = Cx(1.0, 0.0);
    CHECK(max_abs_diff(tangent, want) <= 1e-15);
    CHECK(max_abs_diff(tangent, dsl_tangent_witness(
                                    Hypermatrix::vector(std::vector<double>{1.0, 0.0}),
                                    Hypermatrix::vector(std::vector<double>{0.0, 1.0}))) <= 1e-14);
}

TEST_CASE("tangent of a third power is a multiple of the symmetrized replacement") {
    const StructuredSpec spec = make_spec({{GroupOp::Sym, 1, 3}}, 2);
    TangentWitness w;
    w.spec = spec;
    w.field = Field::Real;
    w.base = {{unit(2, 0)}};
    w.perturb = {{unit(2, 1)}};
    const Hypermatrix tangent = structured_tangent(w);

    std::vector<double> e1{1.0, 0.0};
    std::vector<double> e2{0.0, 1.0};
    const Hypermatrix cube_mix = outer({Hypermatrix::vector(e1), Hypermatrix::vector(e1),
                                        Hypermatrix::vector(e2)});
    const Hypermatrix want = 3.0 * symmetrize(cube_mix);
    CHECK(max_abs_diff(tangent, want) <= 1e-14);
}

TEST_CASE("tangent is linear in the perturbation over 100 witnesses") {
    CounterRng rng(201);
    for (std::size_t trial = 0; trial < 100; ++trial) {
        const Field f = trial % 2 == 0 ? Field::Real : Field::Complex;
        const StructuredSpec spec = spec_family(trial);
        TangentWitness w = make_witness(spec, f, rng);
        TangentWitness w2 = w;
        w2.perturb = random_groups(spec, f, rng);

        TangentWitness sum = w;
        for (std::size_t g = 0; g < sum.perturb.size(); ++g) {
            for (std::size_t j = 0; j < sum.perturb[g].size(); ++j) {
                sum.perturb[g][j] = 2.0 * w.perturb[g][j] + w2.perturb[g][j];
            }
        }
        const Hypermatrix lhs = structured_tangent(sum);
        const Hypermatrix rhs =
            2.0 * structured_tangent(w) + structured_tangent(w2);
        const double scale = std::max(1.0, rhs.max_abs());
        CHECK(max_abs_diff(lhs, rhs) <= 1e-12 * scale);
    }
}

TEST_CASE("difference quotients approach the tangent linearly over 100 witnesses") {
    CounterRng rng(202);
    for (std::size_t trial = 0; trial < 100; ++trial) {
        const Field f = trial % 2 == 0 ? Field::Real : Field::Complex;
        const StructuredSpec spec = spec_family(trial);
        const TangentWitness w = make_witness(spec, f, rng);
        const Hypermatrix tangent = structured_tangent(w);
        const Hypermatrix base_point = point_at(w, 0.0);

        double prev_err = 0.0;
        double prev_t = 0.0;
        for (const double t : {1e-2, 1e-3, 1e-4}) {
            Hypermatrix quotient = point_at(w, t) - base_point;
            quotient *= 1.0 / t;
            const double err = max_abs_diff(quotient, tangent);
            if (prev_t > 0.0 && prev_err > 1e-13) {
                const double shrink = err / prev_err;
                const double linear = t / prev_t;
                CHECK(shrink >= 0.5 * linear);
                CHECK(shrink <= 2.0 * linear);
            }
            prev_err = err;
            prev_t = t;
        }
    }
}

TEST_CASE("symmetrized groups ignore slot order and wedge groups flip sign over 100 instances") {
    CounterRng rng(203);
    for (std::size_t trial = 0; trial < 100; ++trial) {
        const Field f = trial % 2 == 0 ? Field::Real : Field::Complex;
        if (trial % 2 == 0) {
            const StructuredSpec spec = make_spec({{GroupOp::Sym, 3, 1}}, 3);
            VecGroups base = random_groups(spec, f, rng);
            VecGroups swapped = base;
            std::swap(swapped[0][0], swapped[0][2]);
            const Hypermatrix a = structured_point(spec, f, base);
            const Hypermatrix b = structured_point(spec, f, swapped);
            CHECK(max_abs_diff(a, b) <= 1e-12 * std::max(1.0, a.max_abs()));
        } else {
            const StructuredSpec spec = make_spec({{GroupOp::Alt, 2, 1}}, 3);
            VecGroups base = random_groups(spec, f, rng);
            VecGroups swapped = base;
            std::swap(swapped[0][0], swapped[0][1]);
            const Hypermatrix a = structured_point(spec, f, base);
            Hypermatrix b = structured_point(spec, f, swapped);
            b *= -1.0;
            CHECK(max_abs_diff(a, b) <= 1e-12 * std::max(1.0, a.max_abs()));
        }
    }
}

TEST_CASE("independence condition holds for generic slots and fails for copied ones") {
    const StructuredSpec segre =
        make_spec({{GroupOp::Sym, 1, 1}, {GroupOp::Sym, 1, 1}, {GroupOp::Sym, 1, 1}}, 2);
    TangentWitness w;
    w.spec = segre;
    w.field = Field::Real;
    w.base = {{unit(2, 0)}, {unit(2, 0)}, {unit(2, 0)}};
    w.perturb = {{unit(2, 1)}, {unit(2, 1)}, {unit(2, 1)}};
    const ConditionReport good = sufficient_condition(w);
    CHECK(good.holds);
    CHECK(good.hypothesis_in_range);

    TangentWitness same = w;
    same.perturb = same.base;
    const ConditionReport bad = sufficient_condition(same);
    CHECK(!bad.holds);
    CHECK(!bad.reason.empty());
}

TEST_CASE("wedge condition fails when too many vectors share a small space") {
    CounterRng rng(204);
    const StructuredSpec grass = make_spec({{GroupOp::Alt, 2, 1}}, 3);
    const TangentWitness w = make_witness(grass, Field::Complex, rng);
    // four generic vectors in dimension three can never wedge to something nonzero
    const ConditionReport r = sufficient_condition(w);
    CHECK(!r.holds);
}

TEST_CASE("the structural hypothesis flag tracks small parameters separately") {
    CounterRng rng(205);
    const StructuredSpec segre2 = make_spec({{GroupOp::Sym, 1, 1}, {GroupOp::Sym, 1, 1}}, 2);
    const TangentWitness w = make_witness(segre2, Field::Real, rng);
    const ConditionReport r = sufficient_condition(w);
    CHECK(!r.hypothesis_in_range);  // only two factors
    // the algebraic condition itself is still evaluated
    CHECK((r.holds || !r.reason.empty()));
}

TEST_CASE("tangent tensors of independent pairs live on the rank boundary over 100 instances") {
    CounterRng rng(206);
    std::size_t checked = 0;
    for (std::size_t trial = 0; trial < 120 && checked < 100; ++trial) {
        const Field f = trial % 2 == 0 ? Field::Real : Field::Complex;
        const StructuredSpec spec =
            trial % 4 < 2 ? make_spec({{GroupOp::Sym, 1, 1}, {GroupOp::Sym, 1, 1},
                                       {GroupOp::Sym, 1, 1}}, 2)
                          : make_spec({{GroupOp::Sym, 1, 3}}, 2);
        const TangentWitness w = make_witness(spec, f, rng);
        if (!sufficient_condition(w).holds) continue;
        ++checked;
        const Hypermatrix tangent = structured_tangent(w);
        CHECK(mrank(tangent).ranks == std::vector<std::size_t>({2, 2, 2}));
        const double bound = 1e-10 * std::pow(tangent.norm(), 4.0);
        CHECK(std::abs(hyperdeterminant(tangent)) <= bound);
    }
    CHECK(checked == 100);
}
