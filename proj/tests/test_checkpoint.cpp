#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nab/checkpoint.hpp"
#include "nab/encoder.hpp"
#include "nab/fourier.hpp"
#include "nab/network.hpp"

namespace {

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "nab_ckpt_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

nab::Checkpoint sample_checkpoint() {
    nab::Checkpoint ckpt;
    ckpt.bins = nab::init_bins<double>(6, {25.0, 50.0}, 3);
    ckpt.frequencies = nab::sample_frequencies(4, 5);
    ckpt.net = nab::init_network<double>({6, 8, 1}, 4);
    ckpt.adam.resize(ckpt.net.parameter_count() + 7 * 6);
    ckpt.adam.step = 42;
    for (std::size_t i = 0; i < ckpt.adam.m.size(); ++i) {
        ckpt.adam.m[i] = 0.01 * double(i);
        ckpt.adam.v[i] = 0.001 * double(i);
    }
    ckpt.metadata = "{\"epochs\":10}";
    return ckpt;
}

}  // namespace

TEST_CASE("checkpoint round-trip preserves every section bitwise") {
    const auto path = temp_file("full.nabc");
    const auto ckpt = sample_checkpoint();
    nab::save_checkpoint(ckpt, path.string());
    const auto back = nab::load_checkpoint(path.string());

    CHECK(back.bins.count == 6);
    CHECK(back.bins.u == ckpt.bins.u);
    CHECK(back.bins.v == ckpt.bins.v);
    CHECK(back.bins.h == ckpt.bins.h);
    CHECK(back.bins.w == ckpt.bins.w);
    CHECK(back.bins.k == ckpt.bins.k);
    CHECK(back.bins.theta == ckpt.bins.theta);
    CHECK(back.bins.lambda == ckpt.bins.lambda);
    CHECK(back.frequencies.count == 4);
    CHECK(back.frequencies.entries == ckpt.frequencies.entries);
    REQUIRE(back.net.layer_sizes() == ckpt.net.layer_sizes());
    for (std::size_t l = 0; l < back.net.layers.size(); ++l) {
        CHECK(back.net.layers[l].weights == ckpt.net.layers[l].weights);
        CHECK(back.net.layers[l].bias == ckpt.net.layers[l].bias);
    }
    CHECK(back.adam.step == 42);
    CHECK(back.adam.m == ckpt.adam.m);
    CHECK(back.adam.v == ckpt.adam.v);
    CHECK(back.metadata == ckpt.metadata);
}

TEST_CASE("checkpoint without bins or frequencies round-trips") {
    const auto path = temp_file("netonly.nabc");
    nab::Checkpoint ckpt;
    ckpt.net = nab::init_network<double>({4, 1}, 9);
    ckpt.adam.resize(ckpt.net.parameter_count());
    nab::save_checkpoint(ckpt, path.string());
    const auto back = nab::load_checkpoint(path.string());
    CHECK(back.bins.count == 0);
    CHECK(back.frequencies.count == 0);
    CHECK(back.net.layers[0].weights == ckpt.net.layers[0].weights);
    CHECK(back.metadata.empty());
}

TEST_CASE("checkpoint loader rejects malformed files") {
    const auto good_path = temp_file("good.nabc");
    nab::save_checkpoint(sample_checkpoint(), good_path.string());
    std::ifstream in(good_path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    in.close();

    const auto write_bytes = [&](const std::string& name, const std::vector<char>& data) {
        const auto path = temp_file(name);
        std::ofstream out(path, std::ios::binary);
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.close();
        return path;
    };

    SECTION("wrong magic") {
        auto bad = bytes;
        bad[0] = 'Z';
        const auto path = write_bytes("bad_magic.nabc", bad);
        CHECK_THROWS_AS(nab::load_checkpoint(path.string()), nab::format_error);
    }
    SECTION("truncation") {
        auto bad = bytes;
        bad.resize(bytes.size() / 2);
        const auto path = write_bytes("truncated.nabc", bad);
        CHECK_THROWS_AS(nab::load_checkpoint(path.string()), nab::format_error);
    }
    SECTION("unknown section tag") {
        auto bad = bytes;
        // section order: NABP first; corrupt its tag
        bad[8] = 'X';
        const auto path = write_bytes("unknown_tag.nabc", bad);
        CHECK_THROWS_AS(nab::load_checkpoint(path.string()), nab::format_error);
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(nab::load_checkpoint(temp_file("absent.nabc").string()),
                        nab::format_error);
    }
}

TEST_CASE("checkpoint requires network weights") {
    // a file with only a META section must be rejected
    const auto path = temp_file("meta_only.nabc");
    std::ofstream out(path, std::ios::binary);
    out.write("NABC", 4);
    const std::uint32_t sections = 1;
    out.write(reinterpret_cast<const char*>(&sections), 4);
    out.write("META", 4);
    const std::uint64_t len = 2;
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write("{}", 2);
    out.close();
    CHECK_THROWS_AS(nab::load_checkpoint(path.string()), nab::format_error);
}
