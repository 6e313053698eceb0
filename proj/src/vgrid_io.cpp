#include "lamina/vgrid_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "vgrid payload I/O assumes a little-endian host");

namespace lamina {

namespace {

struct Header {
    std::string kind;
    GridDims dims;
    std::string dtype;
    int channels = 1;
};

Header parse_header(const std::string& line, const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw MalformedHeader(path.string() + ": header is not valid JSON");
    }
    for (const char* key : {"magic", "kind", "dims", "spacing", "dtype", "channels"}) {
        if (!j.contains(key)) {
            throw MalformedHeader(path.string() + ": header missing key '" +
                                  key + "'");
        }
    }
    if (j["magic"] != "vgrid1") {
        throw MalformedHeader(path.string() + ": bad magic");
    }
    Header h;
    h.kind = j["kind"].get<std::string>();
    if (h.kind != "scalar" && h.kind != "label" && h.kind != "soft") {
        throw MalformedHeader(path.string() + ": unknown kind '" + h.kind + "'");
    }
    const auto& d = j["dims"];
    const auto& s = j["spacing"];
    if (!d.is_array() || d.size() != 3 || !s.is_array() || s.size() != 3) {
        throw MalformedHeader(path.string() + ": dims/spacing must be 3-element arrays");
    }
    try {
        h.dims = GridDims(d[0].get<int>(), d[1].get<int>(), d[2].get<int>(),
                          s[0].get<double>(), s[1].get<double>(), s[2].get<double>());
    } catch (const DataError& e) {
        throw MalformedHeader(path.string() + ": " + e.what());
    }
    h.dtype = j["dtype"].get<std::string>();
    if (h.dtype != "f32" && h.dtype != "u8") {
        throw UnsupportedDtype(path.string() + ": dtype '" + h.dtype +
                               "' not supported");
    }
    h.channels = j["channels"].get<int>();
    if (h.channels < 1) {
        throw MalformedHeader(path.string() + ": channels must be >= 1");
    }
    if ((h.kind == "scalar" || h.kind == "label") && h.channels != 1) {
        throw MalformedHeader(path.string() + ": kind '" + h.kind +
                              "' requires channels=1");
    }
    if (h.kind == "label" && h.dtype != "u8") {
        throw UnsupportedDtype(path.string() + ": label payload must be u8");
    }
    if (h.kind != "label" && h.dtype != "f32") {
        throw UnsupportedDtype(path.string() + ": " + h.kind +
                               " payload must be f32");
    }
    return h;
}

std::vector<char> read_payload(std::ifstream& in, std::size_t expected,
                               const std::filesystem::path& path) {
    std::vector<char> buf(expected);
    in.read(buf.data(), static_cast<std::streamsize>(expected));
    if (static_cast<std::size_t>(in.gcount()) != expected) {
        throw TruncatedData(path.string() + ": payload shorter than header implies");
    }
    // Anything after the declared payload is a malformed container.
    char extra;
    if (in.read(&extra, 1), in.gcount() != 0) {
        throw MalformedHeader(path.string() + ": trailing bytes after payload");
    }
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& kind,
                const GridDims& dims, const char* dtype, int channels,
                const void* payload, std::size_t payload_bytes) {
    nlohmann::ordered_json j;
    j["magic"] = "vgrid1";
    j["kind"] = kind;
    j["dims"] = {dims.nx, dims.ny, dims.nz};
    j["spacing"] = {dims.sx, dims.sy, dims.sz};
    j["dtype"] = dtype;
    j["channels"] = channels;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open '" + path.string() + "' for writing");
    }
    out << j.dump() << '\n';
    out.write(static_cast<const char*>(payload),
              static_cast<std::streamsize>(payload_bytes));
    if (!out) {
        throw DataError("short write to '" + path.string() + "'");
    }
}

}  // namespace

VgridValue read_vgrid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw MalformedHeader(path.string() + ": missing header line");
    }
    const Header h = parse_header(line, path);
    const std::size_t vox = h.dims.voxel_count();

    if (h.kind == "label") {
        auto buf = read_payload(in, vox, path);
        LabelField3D f(h.dims);
        std::memcpy(f.labels.data(), buf.data(), vox);
        return f;
    }
    const std::size_t n = vox * static_cast<std::size_t>(h.channels);
    auto buf = read_payload(in, n * sizeof(float), path);
    if (h.kind == "scalar") {
        ScalarField3D f(h.dims);
        std::memcpy(f.values.data(), buf.data(), n * sizeof(float));
        f.require_finite();
        return f;
    }
    ChannelStack f(h.dims, h.channels);
    std::memcpy(f.values.data(), buf.data(), n * sizeof(float));
    return f;
}

ScalarField3D read_scalar(const std::filesystem::path& path) {
    auto v = read_vgrid(path);
    if (auto* f = std::get_if<ScalarField3D>(&v)) return std::move(*f);
    throw UnsupportedDtype(path.string() + ": expected a scalar field");
}

LabelField3D read_labels(const std::filesystem::path& path) {
    auto v = read_vgrid(path);
    if (auto* f = std::get_if<LabelField3D>(&v)) return std::move(*f);
    throw UnsupportedDtype(path.string() + ": expected a label field");
}

ChannelStack read_soft(const std::filesystem::path& path) {
    auto v = read_vgrid(path);
    if (auto* f = std::get_if<ChannelStack>(&v)) return std::move(*f);
    throw UnsupportedDtype(path.string() + ": expected a multi-channel field");
}

void write_vgrid(const ScalarField3D& f, const std::filesystem::path& path) {
    write_file(path, "scalar", f.dims, "f32", 1, f.values.data(),
               f.values.size() * sizeof(float));
}

void write_vgrid(const LabelField3D& f, const std::filesystem::path& path) {
    write_file(path, "label", f.dims, "u8", 1, f.labels.data(), f.labels.size());
}

void write_vgrid(const ChannelStack& f, const std::filesystem::path& path) {
    write_file(path, "soft", f.dims, "f32", f.channels, f.values.data(),
               f.values.size() * sizeof(float));
}

}  // namespace lamina
