#pragma once

#include <string>
#include <vector>

#include "bfdreg/core.hpp"

// Binary array format and CSV tables.
//
// Binary layout (little-endian):
//   bytes 0..3   magic "BFDA"
//   bytes 4..5   format version, u16 (currently 1)
//   bytes 6..7   rank, u16
//   then rank u32 dimension sizes
//   then the payload as f64, row-major
// A rank-2 array therefore has a 16-byte header.

namespace bfdreg {

struct Array {
    std::vector<std::uint32_t> dims;
    std::vector<double> data;
};

void write_array(const std::string& path, const Array& a);
Array read_array(const std::string& path);  // throws std::runtime_error on malformed input

void save_image(const std::string& path, const Image& img);        // rank 2, dims [height, width]
Image load_image(const std::string& path, double spacing);
void save_sinogram(const std::string& path, const Sinogram& s);    // rank 2, dims [n_angles, n_offsets]
Sinogram load_sinogram(const std::string& path, double offset_spacing, double row_spacing);
void save_coeffs(const std::string& path, const CoeffSeq& xi);     // rank 1
CoeffSeq load_coeffs(const std::string& path, const std::string& frame_id);

// RFC-4180 CSV.  Numeric cells are written with enough digits to round-trip
// doubles exactly.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string csv_format_double(double v);
void write_csv(const std::string& path, const CsvTable& t);
CsvTable read_csv(const std::string& path);

}  // namespace bfdreg
