#include "gml/serial.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gml {

namespace {

using nlohmann::json;

void write_u32(std::ostream& f, uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }

uint32_t read_u32(std::istream& f) {
    uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

void write_f32(std::ostream& f, const std::vector<double>& vals) {
    std::vector<float> buf(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) buf[i] = float(vals[i]);
    f.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size() * 4));
}

std::vector<double> read_f32(std::istream& f, size_t n) {
    std::vector<float> buf(n);
    f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(n * 4));
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = double(buf[i]);
    return out;
}

void expect_magic(std::istream& f, const char* magic, const std::string& path) {
    char got[4] = {0, 0, 0, 0};
    f.read(got, 4);
    if (!f || std::memcmp(got, magic, 4) != 0)
        throw std::runtime_error(path + ": bad magic, expected " + magic);
}

void expect_eof(std::istream& f, const std::string& path) {
    if (!f) throw std::runtime_error(path + ": truncated file");
    f.peek();
    if (!f.eof()) throw std::runtime_error(path + ": trailing bytes");
}

void save_grid(const std::vector<double>& values, int c, int h, int w, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write("GML1", 4);
    write_u32(f, uint32_t(c));
    write_u32(f, uint32_t(h));
    write_u32(f, uint32_t(w));
    write_f32(f, values);
    if (!f) throw std::runtime_error("write failed: " + path);
}

void load_grid(const std::string& path, std::vector<double>& values, int& c, int& h, int& w) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    expect_magic(f, "GML1", path);
    c = int(read_u32(f));
    h = int(read_u32(f));
    w = int(read_u32(f));
    if (!f || c <= 0 || h <= 0 || w <= 0) throw std::runtime_error(path + ": bad header");
    values = read_f32(f, size_t(c) * h * w);
    expect_eof(f, path);
}

} // namespace

void save_latent(const LatentGrid& z, const std::string& path) {
    save_grid(z.values, z.c, z.h, z.w, path);
}

LatentGrid load_latent(const std::string& path) {
    int c, h, w;
    std::vector<double> vals;
    load_grid(path, vals, c, h, w);
    LatentGrid z = make_latent(w, h, c, 0.0);
    z.values = std::move(vals);
    return z;
}

void save_image_binary(const ImageGrid& img, const std::string& path) {
    save_grid(img.values, img.C, img.H, img.W, path);
}

ImageGrid load_image_binary(const std::string& path) {
    int c, h, w;
    std::vector<double> vals;
    load_grid(path, vals, c, h, w);
    ImageGrid img = make_image(w, h, c, 0.0);
    img.values = std::move(vals);
    return img;
}

void save_scene(const GaussianScene& scene, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write("GMS1", 4);
    write_u32(f, uint32_t(scene.p));
    write_u32(f, uint32_t(scene.a));
    write_u32(f, uint32_t(scene.n_patch));
    write_u32(f, uint32_t(scene.H));
    write_u32(f, uint32_t(scene.W));
    float beta = float(scene.beta);
    f.write(reinterpret_cast<const char*>(&beta), 4);
    int n = scene.total();
    std::vector<double> rec(12 * size_t(n));
    for (int i = 0; i < n; ++i) {
        double* r = &rec[12 * size_t(i)];
        r[0] = scene.mu_fix[2 * i];
        r[1] = scene.mu_fix[2 * i + 1];
        r[2] = scene.mu_bias_raw[2 * i];
        r[3] = scene.mu_bias_raw[2 * i + 1];
        r[4] = scene.log_l11[i];
        r[5] = scene.l21[i];
        r[6] = scene.log_l22[i];
        r[7] = scene.color[3 * i];
        r[8] = scene.color[3 * i + 1];
        r[9] = scene.color[3 * i + 2];
        r[10] = scene.opacity[i];
        r[11] = 0.0; // reserved
    }
    write_f32(f, rec);
    if (!f) throw std::runtime_error("write failed: " + path);
}

GaussianScene load_scene(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    expect_magic(f, "GMS1", path);
    GaussianScene sc;
    sc.p = int(read_u32(f));
    sc.a = int(read_u32(f));
    sc.n_patch = int(read_u32(f));
    sc.H = int(read_u32(f));
    sc.W = int(read_u32(f));
    float beta = 0;
    f.read(reinterpret_cast<char*>(&beta), 4);
    sc.beta = double(beta);
    if (!f || sc.p <= 0 || sc.a < 0 || sc.n_patch <= 0 || sc.H <= 0 || sc.W <= 0 ||
        sc.H % sc.p != 0 || sc.W % sc.p != 0)
        throw std::runtime_error(path + ": bad scene header");
    sc.patches_y = sc.H / sc.p;
    sc.patches_x = sc.W / sc.p;
    size_t n = size_t(sc.total());
    std::vector<double> rec = read_f32(f, 12 * n);
    expect_eof(f, path);
    sc.mu_fix.resize(2 * n);
    sc.mu_bias_raw.resize(2 * n);
    sc.log_l11.resize(n);
    sc.l21.resize(n);
    sc.log_l22.resize(n);
    sc.color.resize(3 * n);
    sc.opacity.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double* r = &rec[12 * i];
        sc.mu_fix[2 * i] = r[0];
        sc.mu_fix[2 * i + 1] = r[1];
        sc.mu_bias_raw[2 * i] = r[2];
        sc.mu_bias_raw[2 * i + 1] = r[3];
        sc.log_l11[i] = r[4];
        sc.l21[i] = r[5];
        sc.log_l22[i] = r[6];
        sc.color[3 * i] = r[7];
        sc.color[3 * i + 1] = r[8];
        sc.color[3 * i + 2] = r[9];
        sc.opacity[i] = r[10];
    }
    return sc;
}

void save_key_json(const RingMask& mask, const WatermarkKey& key, int w, int h,
                   const std::string& path) {
    if (key.values.size() != mask.coords.size())
        throw std::invalid_argument("save_key_json: key length does not match mask");
    json j;
    j["w"] = w;
    j["h"] = h;
    j["r_min"] = mask.r_min;
    j["r_max"] = mask.r_max;
    j["channel"] = mask.channel;
    j["seed"] = key.seed;
    json coords = json::array();
    for (const auto& c : mask.coords) coords.push_back({c[0], c[1]});
    j["coordinates"] = std::move(coords);
    j["eta"] = key.values;
    write_text_file(path, j.dump(2) + "\n");
}

std::tuple<RingMask, WatermarkKey, int, int> load_key_json(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
        RingMask mask;
        int w = j.at("w").get<int>();
        int h = j.at("h").get<int>();
        mask.w = w;
        mask.h = h;
        mask.r_min = j.at("r_min").get<double>();
        mask.r_max = j.at("r_max").get<double>();
        mask.channel = j.at("channel").get<int>();
        for (const auto& c : j.at("coordinates"))
            mask.coords.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
        WatermarkKey key;
        key.seed = j.at("seed").get<uint64_t>();
        key.values = j.at("eta").get<std::vector<double>>();
        if (key.values.size() != mask.coords.size())
            throw std::runtime_error(path + ": eta length does not match coordinates");
        return {std::move(mask), std::move(key), w, h};
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::string transform_to_json(const GeometricTransform& t) {
    json j;
    j["dx_px"] = t.dx;
    j["dy_px"] = t.dy;
    j["rotation_deg"] = t.rotation_deg;
    j["scale"] = t.scale;
    return j.dump(2) + "\n";
}

GeometricTransform transform_from_json(const std::string& text) {
    try {
        json j = json::parse(text);
        GeometricTransform t;
        t.dx = j.at("dx_px").get<double>();
        t.dy = j.at("dy_px").get<double>();
        t.rotation_deg = j.at("rotation_deg").get<double>();
        t.scale = j.at("scale").get<double>();
        return t;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("transform json: ") + e.what());
    }
}

void save_transform_json(const GeometricTransform& t, const std::string& path) {
    write_text_file(path, transform_to_json(t));
}

GeometricTransform load_transform_json(const std::string& path) {
    return transform_from_json(read_text_file(path));
}

void save_png(const ImageGrid& img, const std::string& path) {
    if (img.C != 1 && img.C != 3)
        throw std::invalid_argument("save_png: need 1 or 3 channels");
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("save_png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw std::runtime_error("save_png: encoder failure for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(img.W), png_uint_32(img.H), 8,
                 img.C == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    size_t plane = size_t(img.H) * img.W;
    std::vector<png_byte> row(size_t(img.W) * img.C);
    for (int y = 0; y < img.H; ++y) {
        for (int x = 0; x < img.W; ++x)
            for (int c = 0; c < img.C; ++c) {
                double v = std::clamp(img.values[size_t(c) * plane + size_t(y) * img.W + x], 0.0,
                                      1.0);
                row[size_t(x) * img.C + c] = png_byte(std::lround(v * 255.0));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

ImageGrid load_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("load_png: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        std::fclose(fp);
        throw std::runtime_error("load_png: decoder failure for " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    int W = int(png_get_image_width(png, info));
    int H = int(png_get_image_height(png, info));
    int C = int(png_get_channels(png, info));
    if (C != 1 && C != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("load_png: unsupported channel count in " + path);
    }
    std::vector<png_byte> row(size_t(W) * C);
    ImageGrid img = make_image(W, H, C, 0.0);
    size_t plane = size_t(H) * W;
    for (int y = 0; y < H; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c)
                img.values[size_t(c) * plane + size_t(y) * W + x] =
                    double(row[size_t(x) * C + c]) / 255.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

void save_mask_png(const ImageGrid& mask, const std::string& path) {
    if (mask.C != 1) throw std::invalid_argument("save_mask_png: mask must be 1-channel");
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("save_mask_png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw std::runtime_error("save_mask_png: encoder failure for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(mask.W), png_uint_32(mask.H), 1, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row((size_t(mask.W) + 7) / 8);
    for (int y = 0; y < mask.H; ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (int x = 0; x < mask.W; ++x)
            if (mask.values[size_t(y) * mask.W + x] > 0.5)
                row[size_t(x) >> 3] |= png_byte(0x80 >> (x & 7));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

void save_metric_csv(const std::vector<std::tuple<int, std::string, double>>& rows,
                     const std::string& path) {
    std::ostringstream out;
    out << "trial_id,metric_name,value\n";
    char buf[64];
    for (const auto& [id, name, value] : rows) {
        std::snprintf(buf, sizeof(buf), "%.9g", value);
        out << id << ',' << name << ',' << buf << '\n';
    }
    write_text_file(path, out.str());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(text.data(), std::streamsize(text.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace gml
