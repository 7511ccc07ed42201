#include "pasem/channel.hpp"
#include "pasem/error.hpp"
#include "pasem/io.hpp"
#include "pasem/shaping.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

using namespace pasem;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("pasem_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

} // namespace

TEST_CASE("shaping presets")
{
    const auto c = Constellation::square_qam(6);
    CHECK(shaping_presets().size() == 4);
    for (const char* name : {"mode1", "mode2", "mode3"}) {
        const auto& m = shaping_preset(name);
        CHECK(entropy(m.distribution(c)) == doctest::Approx(m.target_entropy).epsilon(1e-9));
    }
    CHECK(shaping_preset("mode1").target_entropy == 5.5);
    CHECK(shaping_preset("mode3").target_entropy == 4.5);

    const auto d4 = shaping_preset("mode4").distribution(c);
    CHECK(entropy(d4) == doctest::Approx(std::log2(36.0)).epsilon(1e-12));
    for (std::size_t j = 0; j < c.size(); ++j) {
        const auto x = c.point(j);
        const bool inner = std::abs(x.real()) <= 5 && std::abs(x.imag()) <= 5;
        CHECK(d4[j] == (inner ? doctest::Approx(1.0 / 36) : doctest::Approx(0.0)));
    }

    const auto p = preset_params(shaping_preset("mode2"), c, 13.0, 1.5);
    CHECK(p.delta == 1.5);
    CHECK(snr_db(p, c) == doctest::Approx(13.0).epsilon(1e-12));
    CHECK_THROWS_AS(shaping_preset("mode9"), InvalidArgument);
    CHECK_THROWS_AS(mb_nu_for_entropy(c, 6.5), OutOfRange);
    CHECK(mb_nu_for_entropy(c, 6.0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("sample files")
{
    TempDir tmp;
    const auto c = Constellation::square_qam(6);
    const auto b = simulate(c, preset_params(shaping_preset("mode1"), c, 14.0), 1000, 1);

    SUBCASE("binary holds float32 pairs")
    {
        const auto path = tmp.path / "obs.bin";
        io::write_samples(path, b.observations, io::SampleFormat::binary);
        CHECK(fs::file_size(path) == 8 * b.size());
        const auto back = io::read_samples(path, io::SampleFormat::binary);
        CHECK(back == io::quantize_f32(b.observations));
        io::write_samples(tmp.path / "again.bin", back, io::SampleFormat::binary);
        CHECK(io::read_samples(tmp.path / "again.bin", io::SampleFormat::binary) == back);
    }
    SUBCASE("csv keeps nine significant digits")
    {
        const auto path = tmp.path / "obs.csv";
        io::write_samples(path, b.observations, io::SampleFormat::csv);
        const auto back = io::read_samples(path, io::SampleFormat::csv);
        REQUIRE(back.size() == b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            CHECK(std::abs(back[i].real() - b.observations[i].real()) <= 1e-8 * std::abs(b.observations[i].real()));
            CHECK(std::abs(back[i].imag() - b.observations[i].imag()) <= 1e-8 * std::abs(b.observations[i].imag()));
        }
    }
    SUBCASE("symbols survive as points")
    {
        const auto pts = io::points_from_symbols(c, *b.symbols);
        CHECK(io::symbols_from_points(c, pts) == *b.symbols);
        CHECK_THROWS_AS(io::symbols_from_points(c, std::vector<cplx>{{0.5, 1.0}}), InvalidArgument);
    }
    SUBCASE("format dispatch and errors")
    {
        CHECK(io::resolve_format("a.bin") == io::SampleFormat::binary);
        CHECK(io::resolve_format("a.csv") == io::SampleFormat::csv);
        CHECK(io::resolve_format("a.dat", "csv") == io::SampleFormat::csv);
        CHECK_THROWS_AS(io::resolve_format("a.dat"), InvalidArgument);
        CHECK_THROWS_AS(io::read_samples(tmp.path / "missing.bin", io::SampleFormat::binary), IoError);
        std::ofstream(tmp.path / "odd.bin", std::ios::binary) << "12345";
        CHECK_THROWS_AS(io::read_samples(tmp.path / "odd.bin", io::SampleFormat::binary), InvalidArgument);
        std::ofstream(tmp.path / "bad.csv") << "1.0,2.0\nnot,a number\n";
        CHECK_THROWS_AS(io::read_samples(tmp.path / "bad.csv", io::SampleFormat::csv), InvalidArgument);
        CHECK_THROWS_AS(io::write_samples(tmp.path / "no" / "dir.bin", b.observations, io::SampleFormat::binary),
                        IoError);
    }
}

TEST_CASE("parameter documents")
{
    const auto c = Constellation::square_qam(6);
    const ChannelParams p{1.1, 0.4, mb_distribution(c, 0.05)};
    SUBCASE("round trip")
    {
        const auto back = io::params_from_json(io::to_json(p), c);
        CHECK(back.delta == p.delta);
        CHECK(back.sigma2 == p.sigma2);
        for (std::size_t j = 0; j < c.size(); ++j) CHECK(back.dist[j] == doctest::Approx(p.dist[j]).epsilon(1e-15));
    }
    SUBCASE("sidecar and nu-only documents")
    {
        const auto side = io::sidecar(c, p, 20000, 7);
        CHECK(side["n"] == 20000);
        CHECK(side["constellation"]["m"] == 6);
        CHECK(io::params_from_json(side, c).delta == p.delta);
        const io::json nu_only = {{"delta", 1.0}, {"sigma2", 0.5}, {"nu", 0.05}};
        CHECK(io::params_from_json(nu_only, c).dist[0] == mb_distribution(c, 0.05)[0]);
    }
    SUBCASE("mismatches and bad values")
    {
        const auto c16 = Constellation::square_qam(4);
        auto doc = io::to_json(ChannelParams{1.0, 1.0, SymbolDistribution::uniform(c16)});
        CHECK_THROWS_AS(io::params_from_json(doc, c), InvalidArgument);
        doc["constellation"] = {{"m", 4}};
        CHECK_THROWS_AS(io::params_from_json(doc, c), InvalidArgument);
        CHECK_THROWS_AS(io::params_from_json(io::json{{"delta", 1.0}, {"sigma2", 0.0}, {"nu", 0.0}}, c),
                        InvalidArgument);
        CHECK_THROWS_AS(io::params_from_json(io::json{{"delta", 1.0}, {"sigma2", 1.0}}, c), InvalidArgument);
    }
    SUBCASE("reports")
    {
        const MetricReport r{0.98, 0.5, 1.0 - 0.5 / 6, 4.5, 5.0, {0.1, 0.1, 0.1, 0.1, 0.05, 0.05}};
        const auto j = io::to_json(r);
        CHECK(j["u_s"] == 0.5);
        CHECK(j["per_bit_uncertainty"].size() == 6);
    }
}
