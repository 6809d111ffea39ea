#include "morel/image.hpp"

#include <cstdio>
#include <fstream>

namespace morel {

std::vector<double> Image::luminance() const {
    std::vector<double> lum(static_cast<size_t>(width_) * height_);
    for (size_t i = 0; i < lum.size(); ++i) {
        const size_t j = i * 3;
        lum[i] = (data_[j] + data_[j + 1] + data_[j + 2]) / 3.0;
    }
    return lum;
}

Image Frame8::to_image() const {
    Image img(width, height);
    double* out = img.data();
    for (size_t i = 0; i < data.size(); ++i) out[i] = data[i] / 255.0;
    return img;
}

Frame8 Frame8::from_image(const Image& img) {
    Frame8 f;
    f.width = img.width();
    f.height = img.height();
    f.data.resize(img.size());
    const double* in = img.data();
    for (size_t i = 0; i < f.data.size(); ++i) f.data[i] = quantize8(in[i]);
    return f;
}

void write_ppm(const std::filesystem::path& path, const Frame8& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open for writing: " + path.string());
    out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.data.data()),
              static_cast<std::streamsize>(frame.data.size()));
    if (!out) throw Error("short write: " + path.string());
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
    write_ppm(path, Frame8::from_image(img));
}

Frame8 read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("cannot open: " + path.string());

    std::string magic;
    in >> magic;
    if (magic != "P6") throw CorruptRecord("not a P6 ppm: " + path.string());

    auto next_token = [&in, &path]() -> long {
        // PPM allows '#' comments between header tokens.
        for (;;) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v = 0;
        if (!(in >> v)) throw CorruptRecord("bad ppm header: " + path.string());
        return v;
    };

    const long w = next_token();
    const long h = next_token();
    const long maxval = next_token();
    if (maxval != 255 || w <= 0 || h <= 0) throw CorruptRecord("unsupported ppm: " + path.string());
    in.get();  // single whitespace after maxval

    Frame8 f;
    f.width = static_cast<int>(w);
    f.height = static_cast<int>(h);
    f.data.resize(static_cast<size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(f.data.size()))
        throw CorruptRecord("truncated ppm: " + path.string());
    return f;
}

}  // namespace morel
