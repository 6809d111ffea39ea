#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "morel/deformation.hpp"

using namespace morel;

namespace {

AnchorSpace owner_space(uint64_t seed = 4) {
    AnchorSpace space = init_anchor_space({{1.0, 1.0}, {4.5, 2.5}, {8.0, 8.0}}, 0.5, seed);
    space.kind = SpaceKind::Key;
    space.key_index = 1;
    space.key_frame = 40;
    space.bbox_min = {0.0, 0.0};
    space.bbox_max = {10.0, 10.0};
    return space;
}

}  // namespace

TEST_CASE("normalize_time maps the window endpoints to -1 and 1") {
    CHECK(normalize_time(80, 80, 40, 240).tau == 0.0);
    CHECK(normalize_time(120, 80, 40, 240).tau == 1.0);
    CHECK(normalize_time(40, 80, 40, 240).tau == -1.0);
    CHECK(normalize_time(100, 80, 40, 240).tau == 0.5);
}

TEST_CASE("normalize_time rejects frames outside the window") {
    CHECK_THROWS_AS(normalize_time(121, 80, 40, 240), OutOfWindow);
    CHECK_THROWS_AS(normalize_time(39, 80, 40, 240), OutOfWindow);
    // Clamped at the sequence end: BDW_5 = [160, 239] for T=240, GOP=40.
    CHECK(normalize_time(239, 200, 40, 240).tau == doctest::Approx(0.975));
    CHECK_THROWS_AS(normalize_time(240, 200, 40, 240), OutOfWindow);
}

TEST_CASE("freshly initialized field returns exactly zero deltas") {
    const AnchorSpace space = owner_space();
    const DeformationField field = make_deformation_field(space, 16, 8, 32, 9);
    for (double tau : {-1.0, -0.33, 0.0, 0.71, 1.0}) {
        const DeformationDelta d = query(field, {3.3, 7.7}, tau, nullptr);
        CHECK(d.d_position.x == 0.0);
        CHECK(d.d_position.y == 0.0);
        CHECK(d.d_log_scaling.x == 0.0);
        CHECK(d.d_log_scaling.y == 0.0);
        for (double v : d.d_opacity_logit) CHECK(v == 0.0);
    }
}

TEST_CASE("plane samples at grid nodes equal direct lookups") {
    const AnchorSpace space = owner_space();
    DeformationField field = make_deformation_field(space, 8, 4, 16, 11);
    Rng rng(5, 5);
    for (auto& v : field.grid_xy) v = rng.normal(0.0, 1.0);
    for (auto& v : field.grid_xt) v = rng.normal(0.0, 1.0);
    for (auto& v : field.grid_yt) v = rng.normal(0.0, 1.0);

    const int res = field.grid_res;
    const size_t plane = static_cast<size_t>(res) * res;
    const double sx = (field.bbox_max.x - field.bbox_min.x);
    const double sy = (field.bbox_max.y - field.bbox_min.y);

    // The xy plane samples (x, y); xt samples (x, tau); yt samples (y, tau).
    for (int ui = 0; ui < res; ++ui) {
        for (int vi = 0; vi < res; ++vi) {
            const double x = field.bbox_min.x + sx * ui / (res - 1);
            const double y_from_v = field.bbox_min.y + sy * vi / (res - 1);
            const double y_from_u = field.bbox_min.y + sy * ui / (res - 1);
            const double tau = 2.0 * vi / (res - 1) - 1.0;

            const PlaneSamples s_xy = sample_planes(field, {x, y_from_v}, 0.0);
            const PlaneSamples s_t = sample_planes(field, {x, y_from_u}, tau);
            for (int c = 0; c < field.channels; ++c) {
                CHECK(std::abs(s_xy.xy[c] - field.grid_xy[c * plane + vi * res + ui]) < 1e-12);
                CHECK(std::abs(s_t.xt[c] - field.grid_xt[c * plane + vi * res + ui]) < 1e-12);
                CHECK(std::abs(s_t.yt[c] - field.grid_yt[c * plane + vi * res + ui]) < 1e-12);
            }
        }
    }
}

TEST_CASE("plane sample at a cell center is the mean of the 4 node values") {
    const AnchorSpace space = owner_space();
    DeformationField field = make_deformation_field(space, 8, 4, 16, 13);
    Rng rng(6, 6);
    for (auto& v : field.grid_xy) v = rng.normal(0.0, 1.0);

    const int res = field.grid_res;
    const size_t plane = static_cast<size_t>(res) * res;
    const double sx = (field.bbox_max.x - field.bbox_min.x);
    const double sy = (field.bbox_max.y - field.bbox_min.y);
    for (int ui = 0; ui + 1 < res; ++ui) {
        for (int vi = 0; vi + 1 < res; ++vi) {
            const double x = field.bbox_min.x + sx * (ui + 0.5) / (res - 1);
            const double y = field.bbox_min.y + sy * (vi + 0.5) / (res - 1);
            const PlaneSamples s = sample_planes(field, {x, y}, 0.0);
            for (int c = 0; c < field.channels; ++c) {
                const double* g = field.grid_xy.data() + c * plane;
                const double mean = 0.25 * (g[vi * res + ui] + g[vi * res + ui + 1] +
                                            g[(vi + 1) * res + ui] + g[(vi + 1) * res + ui + 1]);
                CHECK(std::abs(s.xy[c] - mean) < 1e-12);
            }
        }
    }
}

TEST_CASE("apply with a zero delta leaves the anchor untouched") {
    const AnchorSpace space = owner_space();
    DeformationDelta zero;
    zero.d_opacity_logit.assign(space.slots, 0.0);
    const AnchorDeformState st = apply_deformation(space, 1, zero);
    CHECK(st.position.x == space.position(1).x);
    CHECK(st.position.y == space.position(1).y);
    CHECK(st.log_scaling.x == space.log_scaling(1).x);
}

TEST_CASE("apply shifts position by exactly the delta") {
    const AnchorSpace space = owner_space();
    DeformationDelta d;
    d.d_position = {1.0, 0.0};
    d.d_opacity_logit.assign(space.slots, 0.0);
    const AnchorDeformState st = apply_deformation(space, 0, d);
    CHECK(st.position.x == space.position(0).x + 1.0);
    CHECK(st.position.y == space.position(0).y);
}

TEST_CASE("apply then apply of the negation restores the anchor") {
    const AnchorSpace space = owner_space();
    Rng rng(8, 8);
    DeformationDelta d;
    d.d_position = {rng.normal(0, 1), rng.normal(0, 1)};
    d.d_log_scaling = {rng.normal(0, 1), rng.normal(0, 1)};
    for (int i = 0; i < space.slots; ++i) d.d_opacity_logit.push_back(rng.normal(0, 1));

    const AnchorDeformState deformed = apply_deformation(space, 2, d);
    const AnchorDeformState restored = apply_deformation(deformed, negate(d));
    const AnchorDeformState original = canonical_state(space, 2);
    CHECK(std::abs(restored.position.x - original.position.x) < 1e-12);
    CHECK(std::abs(restored.position.y - original.position.y) < 1e-12);
    CHECK(std::abs(restored.log_scaling.x - original.log_scaling.x) < 1e-12);
    CHECK(std::abs(restored.log_scaling.y - original.log_scaling.y) < 1e-12);
    for (int i = 0; i < space.slots; ++i)
        CHECK(std::abs(restored.opacity_logit_delta[i]) < 1e-12);
}

TEST_CASE("query rejects tau outside [-1, 1]") {
    const AnchorSpace space = owner_space();
    const DeformationField field = make_deformation_field(space, 8, 4, 16, 2);
    CHECK_THROWS_AS(query(field, {1.0, 1.0}, 1.5, nullptr), InvalidInput);
}

TEST_CASE("query is continuous in tau") {
    const AnchorSpace space = owner_space();
    DeformationField field = make_deformation_field(space, 16, 8, 32, 3);
    Rng rng(9, 9);
    for (auto& v : field.w2) v = rng.normal(0.0, 0.2);
    for (auto& v : field.b2) v = rng.normal(0.0, 0.05);

    const Vec2 p{3.7, 6.1};
    const double delta = 1e-3;
    double max_jump = 0.0;
    for (double tau = -1.0; tau <= 1.0 - delta; tau += 0.01) {
        const DeformationDelta a = query(field, p, tau, nullptr);
        const DeformationDelta b = query(field, p, tau + delta, nullptr);
        max_jump = std::max(max_jump, std::abs(a.d_position.x - b.d_position.x));
    }
    CHECK(max_jump < 0.05);  // empirical Lipschitz bound on the smooth field
}
