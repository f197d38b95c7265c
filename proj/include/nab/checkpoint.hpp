#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nab/adam.hpp"
#include "nab/common.hpp"
#include "nab/encoder.hpp"
#include "nab/fourier.hpp"
#include "nab/network.hpp"
#include "nab/raster_io.hpp"

namespace nab {

// Training state container: an NABC file holds tagged sections in a fixed
// order. NABP carries the seven bin arrays, RFCM the Fourier frequencies
// (whichever encoder the run used), NETW the layer manifest plus weights and
// biases, ADAM the optimizer moments, META a free-form JSON echo of the run.
// All numeric payloads are 64-bit little-endian floats.
struct Checkpoint {
    BinParameterSet<double> bins;  // count 0 when the run used no bins
    FrequencyMatrix frequencies;   // count 0 when the run used no RFC encoder
    NetworkParameters<double> net;
    AdamState adam;
    std::string metadata;
};

inline constexpr char kCheckpointMagic[4] = {'N', 'A', 'B', 'C'};

namespace ckpt_detail {

inline void put_u64le(std::ostream& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        const unsigned char byte = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(&byte), 1);
    }
}

inline std::uint64_t get_u64le(std::istream& in, const std::string& what) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        unsigned char byte = 0;
        if (!in.read(reinterpret_cast<char*>(&byte), 1)) {
            throw format_error("truncated " + what);
        }
        v |= static_cast<std::uint64_t>(byte) << (8 * i);
    }
    return v;
}

inline void put_section(std::ostream& out, const char tag[4], const std::string& payload) {
    out.write(tag, 4);
    put_u64le(out, payload.size());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

}  // namespace ckpt_detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    validate_network(ckpt.net);
    require(ckpt.adam.m.size() == ckpt.adam.v.size(), "save_checkpoint: moment size mismatch");

    std::vector<std::pair<std::string, std::string>> sections;
    if (ckpt.bins.count > 0) {
        validate_bins(ckpt.bins);
        std::ostringstream s;
        io_detail::put_u32le(s, static_cast<std::uint32_t>(ckpt.bins.count));
        io_detail::write_f64_payload(s, ckpt.bins.u);
        io_detail::write_f64_payload(s, ckpt.bins.v);
        io_detail::write_f64_payload(s, ckpt.bins.h);
        io_detail::write_f64_payload(s, ckpt.bins.w);
        io_detail::write_f64_payload(s, ckpt.bins.k);
        io_detail::write_f64_payload(s, ckpt.bins.theta);
        io_detail::write_f64_payload(s, ckpt.bins.lambda);
        sections.emplace_back("NABP", s.str());
    }
    if (ckpt.frequencies.count > 0) {
        require(ckpt.frequencies.entries.size() == 2 * ckpt.frequencies.count,
                "save_checkpoint: malformed frequency matrix");
        std::ostringstream s;
        io_detail::put_u32le(s, static_cast<std::uint32_t>(ckpt.frequencies.count));
        io_detail::write_f64_payload(s, ckpt.frequencies.entries);
        sections.emplace_back("RFCM", s.str());
    }
    {
        std::ostringstream s;
        const auto sizes = ckpt.net.layer_sizes();
        io_detail::put_u32le(s, static_cast<std::uint32_t>(sizes.size()));
        for (std::size_t size : sizes) io_detail::put_u32le(s, static_cast<std::uint32_t>(size));
        for (const auto& layer : ckpt.net.layers) {
            io_detail::write_f64_payload(s, layer.weights);
            io_detail::write_f64_payload(s, layer.bias);
        }
        sections.emplace_back("NETW", s.str());
    }
    {
        std::ostringstream s;
        ckpt_detail::put_u64le(s, ckpt.adam.step);
        ckpt_detail::put_u64le(s, ckpt.adam.m.size());
        io_detail::write_f64_payload(s, ckpt.adam.m);
        io_detail::write_f64_payload(s, ckpt.adam.v);
        sections.emplace_back("ADAM", s.str());
    }
    sections.emplace_back("META", ckpt.metadata);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("cannot open for writing: " + path);
    out.write(kCheckpointMagic, 4);
    io_detail::put_u32le(out, static_cast<std::uint32_t>(sections.size()));
    for (const auto& [tag, payload] : sections) {
        ckpt_detail::put_section(out, tag.c_str(), payload);
    }
    if (!out) throw format_error("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open for reading: " + path);
    char head[4] = {};
    if (!in.read(head, 4)) throw format_error("truncated header in " + path);
    if (std::memcmp(head, kCheckpointMagic, 4) != 0) {
        throw format_error("bad magic in " + path + " (expected NABC)");
    }
    const std::uint32_t count = io_detail::get_u32le(in, "section count in " + path);

    Checkpoint ckpt;
    for (std::uint32_t sec = 0; sec < count; ++sec) {
        char tag[5] = {};
        if (!in.read(tag, 4)) throw format_error("truncated section tag in " + path);
        const std::uint64_t length = ckpt_detail::get_u64le(in, "section length in " + path);
        std::string payload(length, '\0');
        if (length > 0 && !in.read(payload.data(), static_cast<std::streamsize>(length))) {
            throw format_error("truncated section payload in " + path);
        }
        std::istringstream s(payload);
        const std::string name(tag, 4);
        if (name == "NABP") {
            const std::uint32_t m = io_detail::get_u32le(s, "bin count in " + path);
            if (m == 0) throw format_error("empty bin section in " + path);
            ckpt.bins.resize(m);
            io_detail::read_f64_payload(s, ckpt.bins.u, m, path);
            io_detail::read_f64_payload(s, ckpt.bins.v, m, path);
            io_detail::read_f64_payload(s, ckpt.bins.h, m, path);
            io_detail::read_f64_payload(s, ckpt.bins.w, m, path);
            io_detail::read_f64_payload(s, ckpt.bins.k, m, path);
            io_detail::read_f64_payload(s, ckpt.bins.theta, m, path);
            io_detail::read_f64_payload(s, ckpt.bins.lambda, m, path);
        } else if (name == "RFCM") {
            const std::uint32_t t = io_detail::get_u32le(s, "frequency count in " + path);
            if (t == 0) throw format_error("empty frequency section in " + path);
            ckpt.frequencies.count = t;
            io_detail::read_f64_payload(s, ckpt.frequencies.entries, 2 * std::size_t{t}, path);
        } else if (name == "NETW") {
            const std::uint32_t size_count = io_detail::get_u32le(s, "layer manifest in " + path);
            if (size_count < 2) throw format_error("malformed layer manifest in " + path);
            std::vector<std::size_t> sizes(size_count);
            for (auto& size : sizes) size = io_detail::get_u32le(s, "layer size in " + path);
            ckpt.net.layers.clear();
            for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
                typename NetworkParameters<double>::Layer layer;
                layer.fan_in = sizes[l];
                layer.fan_out = sizes[l + 1];
                io_detail::read_f64_payload(s, layer.weights, layer.fan_in * layer.fan_out, path);
                io_detail::read_f64_payload(s, layer.bias, layer.fan_out, path);
                ckpt.net.layers.push_back(std::move(layer));
            }
        } else if (name == "ADAM") {
            ckpt.adam.step = ckpt_detail::get_u64le(s, "optimizer step in " + path);
            const std::uint64_t n = ckpt_detail::get_u64le(s, "optimizer extent in " + path);
            io_detail::read_f64_payload(s, ckpt.adam.m, n, path);
            io_detail::read_f64_payload(s, ckpt.adam.v, n, path);
        } else if (name == "META") {
            ckpt.metadata = payload;
        } else {
            throw format_error("unknown section '" + name + "' in " + path);
        }
    }
    if (ckpt.net.layers.empty()) throw format_error("checkpoint has no network section: " + path);
    return ckpt;
}

}  // namespace nab
