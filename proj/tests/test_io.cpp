#include <doctest.h>

#include <sstream>

#include "eleson/dataset_io.hpp"
#include "eleson/serialize.hpp"

using namespace eleson;

TEST_CASE("dataset text format round trip") {
    Dataset ds;
    Rng rng(11);
    for (int r = 0; r < 3; ++r) {
        LabeledWindow lw;
        lw.window.sample_rate = 100;
        lw.window.samples.resize(20, 9);
        for (int i = 0; i < 20; ++i)
            for (int c = 0; c < 9; ++c) lw.window.samples(i, c) = static_cast<float>(rng.normal(0, 3));
        lw.label = state_from_code(r % 3);
        lw.vp_flag = r == 2 ? -1 : r % 2;
        lw.session_id = "s" + std::to_string(r);
        lw.location_id = "loc" + std::to_string(r);
        ds.records.push_back(std::move(lw));
    }
    ds.refresh_proportions();

    std::stringstream ss;
    write_dataset(ss, ds);
    Dataset back = read_dataset(ss);

    REQUIRE(back.records.size() == 3);
    CHECK(back.sample_rate() == 100);
    CHECK(back.window_len() == 20);
    for (int r = 0; r < 3; ++r) {
        const auto& a = ds.records[static_cast<size_t>(r)];
        const auto& b = back.records[static_cast<size_t>(r)];
        CHECK(a.label == b.label);
        CHECK(a.vp_flag == b.vp_flag);
        CHECK(a.session_id == b.session_id);
        CHECK(a.location_id == b.location_id);
        CHECK((a.window.samples - b.window.samples).cwiseAbs().maxCoeff() == 0.f);
    }
    CHECK(back.meta.class_proportions[0] == doctest::Approx(1.0 / 3));
}

TEST_CASE("dataset reader rejects malformed input") {
    std::stringstream ss("bogus header\n");
    CHECK_THROWS_AS(read_dataset(ss), DataError);

    std::stringstream ss2("eleson-dataset v1; rate=100; T=4\nlabel=0; vp=-; session=a; location=b\n1,2,3\n");
    CHECK_THROWS_AS(read_dataset(ss2), DataError);
}

TEST_CASE("session text format round trip") {
    std::vector<InsSample> session(5);
    for (int i = 0; i < 5; ++i) {
        session[static_cast<size_t>(i)].t = i * 0.01;
        session[static_cast<size_t>(i)].accel = Eigen::Vector3d(0.5 * i, -1, 2);
        session[static_cast<size_t>(i)].gyro = Eigen::Vector3d(0, 0.25 * i, 0);
        session[static_cast<size_t>(i)].mag = Eigen::Vector3d(20, 30, 40 + i);
    }
    std::stringstream ss;
    write_session(ss, session, 100.0);
    auto [back, rate] = read_session(ss);
    CHECK(rate == 100.0);
    REQUIRE(back.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(back[static_cast<size_t>(i)].t == doctest::Approx(session[static_cast<size_t>(i)].t));
        CHECK(back[static_cast<size_t>(i)].mag[2] ==
              doctest::Approx(session[static_cast<size_t>(i)].mag[2]));
    }
}

TEST_CASE("elsn round trip is bit exact") {
    Rng rng(5);
    std::vector<TensorRecord> recs;
    TensorRecord a;
    a.name = "layer.weight";
    a.dims = {3, 4};
    for (int i = 0; i < 12; ++i) a.data.push_back(static_cast<float>(rng.normal(0, 1)));
    recs.push_back(a);
    TensorRecord b;
    b.name = "scalar";
    b.dims = {1};
    b.data = {3.14159f};
    recs.push_back(b);

    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    write_elsn(ss, recs);
    CHECK(ss.str().size() == elsn_byte_size(recs));

    auto back = read_elsn(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "layer.weight");
    CHECK(back[0].dims == std::vector<std::uint32_t>{3, 4});
    for (int i = 0; i < 12; ++i) {
        // bit-exact: compare representations, not approx values
        CHECK(std::memcmp(&back[0].data[static_cast<size_t>(i)], &recs[0].data[static_cast<size_t>(i)],
                          4) == 0);
    }
    CHECK(back[1].data[0] == 3.14159f);
}

TEST_CASE("elsn rejects corrupt input") {
    std::stringstream ss(std::string("NOPE"), std::ios::in | std::ios::binary);
    CHECK_THROWS_AS(read_elsn(ss), DataError);
}
