#include "bfdreg/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace bfdreg {

namespace {

const char kMagic[4] = {'B', 'F', 'D', 'A'};
const std::uint16_t kVersion = 1;

void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace

void write_array(const std::string& path, const Array& a) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_array: cannot open " + path);
    os.write(kMagic, 4);
    put_u16(os, kVersion);
    put_u16(os, static_cast<std::uint16_t>(a.dims.size()));
    std::size_t total = 1;
    for (auto d : a.dims) {
        put_u32(os, d);
        total *= d;
    }
    if (total != a.data.size()) throw std::runtime_error("write_array: dims/data mismatch");
    for (double v : a.data) put_f64(os, v);
    if (!os) throw std::runtime_error("write_array: write failed for " + path);
}

Array read_array(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_array: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("read_array: bad magic in " + path);
    std::uint16_t version = get_u16(is);
    if (version != kVersion) throw std::runtime_error("read_array: unsupported version");
    std::uint16_t rank = get_u16(is);
    Array a;
    std::size_t total = 1;
    for (int i = 0; i < rank; ++i) {
        a.dims.push_back(get_u32(is));
        total *= a.dims.back();
    }
    if (!is) throw std::runtime_error("read_array: truncated header in " + path);
    a.data.resize(total);
    for (std::size_t i = 0; i < total; ++i) a.data[i] = get_f64(is);
    if (!is) throw std::runtime_error("read_array: truncated payload in " + path);
    return a;
}

void save_image(const std::string& path, const Image& img) {
    Array a;
    a.dims = {static_cast<std::uint32_t>(img.height), static_cast<std::uint32_t>(img.width)};
    a.data = img.values;
    write_array(path, a);
}

Image load_image(const std::string& path, double spacing) {
    Array a = read_array(path);
    if (a.dims.size() != 2) throw std::runtime_error("load_image: rank != 2");
    Image img(static_cast<int>(a.dims[1]), static_cast<int>(a.dims[0]), spacing);
    img.values = std::move(a.data);
    return img;
}

void save_sinogram(const std::string& path, const Sinogram& s) {
    Array a;
    a.dims = {static_cast<std::uint32_t>(s.n_angles), static_cast<std::uint32_t>(s.n_offsets)};
    a.data = s.values;
    write_array(path, a);
}

Sinogram load_sinogram(const std::string& path, double offset_spacing, double row_spacing) {
    Array a = read_array(path);
    if (a.dims.size() != 2) throw std::runtime_error("load_sinogram: rank != 2");
    Sinogram s(static_cast<int>(a.dims[0]), static_cast<int>(a.dims[1]), offset_spacing,
               row_spacing);
    s.values = std::move(a.data);
    return s;
}

void save_coeffs(const std::string& path, const CoeffSeq& xi) {
    Array a;
    a.dims = {static_cast<std::uint32_t>(xi.entries.size())};
    a.data = xi.entries;
    write_array(path, a);
}

CoeffSeq load_coeffs(const std::string& path, const std::string& frame_id) {
    Array a = read_array(path);
    if (a.dims.size() != 1) throw std::runtime_error("load_coeffs: rank != 1");
    CoeffSeq xi;
    xi.frame_id = frame_id;
    xi.entries = std::move(a.data);
    return xi;
}

std::string csv_format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {
bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string quote(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}
}  // namespace

void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream os(path, std::ios::binary);  // binary: fixed \r\n line ends everywhere
    if (!os) throw std::runtime_error("write_csv: cannot open " + path);
    auto put_row = [&os](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << quote(row[i]);
        }
        os << "\r\n";
    };
    put_row(t.header);
    for (const auto& r : t.rows) put_row(r);
    if (!os) throw std::runtime_error("write_csv: write failed for " + path);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_csv: cannot open " + path);
    std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_dirty = false;
    for (std::size_t i = 0; i < content.size(); ++i) {
        char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            row_dirty = true;
        } else if (c == ',') {
            row.push_back(field);
            field.clear();
            row_dirty = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
            if (row_dirty || !field.empty()) {
                row.push_back(field);
                field.clear();
                rows.push_back(std::move(row));
                row.clear();
                row_dirty = false;
            }
        } else {
            field += c;
            row_dirty = true;
        }
    }
    if (in_quotes) throw std::runtime_error("read_csv: unterminated quoted field");
    if (row_dirty || !field.empty()) {
        row.push_back(field);
        rows.push_back(std::move(row));
    }
    CsvTable t;
    if (!rows.empty()) {
        t.header = rows.front();
        t.rows.assign(rows.begin() + 1, rows.end());
    }
    return t;
}

}  // namespace bfdreg
