#include "mimoic/serialization.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace mimoic {

namespace {

constexpr const char* kChannelMagic = "mimoic-channels";
constexpr const char* kBeamMagic = "mimoic-beamformers";
constexpr int kFormatVersion = 1;

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_double(const std::string& token) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ConfigError("malformed number '" + token + "'");
  return x;
}

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw ConfigError("expected '" + word + "' but found '" + got + "'");
}

int read_int(std::istream& in) {
  long long x = 0;
  if (!(in >> x)) throw ConfigError("expected an integer");
  return static_cast<int>(x);
}

void write_matrix(std::ostream& out, const CMatrix& m) {
  out << "real";
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << hex(m(r, c).real());
  out << "\nimag";
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << hex(m(r, c).imag());
  out << '\n';
}

CMatrix read_matrix(std::istream& in, int rows, int cols) {
  if (rows < 1 || cols < 1) throw ConfigError("matrix dimensions must be positive");
  CMatrix m(rows, cols);
  std::string token;
  expect(in, "real");
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!(in >> token)) throw ConfigError("truncated matrix data");
      m(r, c).real(parse_double(token));
    }
  expect(in, "imag");
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!(in >> token)) throw ConfigError("truncated matrix data");
      m(r, c).imag(parse_double(token));
    }
  return m;
}

void read_header(std::istream& in, const char* magic) {
  expect(in, magic);
  if (read_int(in) != kFormatVersion) throw ConfigError(std::string("unsupported ") + magic + " version");
}

template <class Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  fn(out);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::ifstream open_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

void write_channels(std::ostream& out, const ChannelSet& channels) {
  out << kChannelMagic << ' ' << kFormatVersion << '\n' << "users " << channels.users() << '\n';
  for (int k = 0; k < channels.users(); ++k) {
    for (int j = 0; j < channels.users(); ++j) {
      const CMatrix& h = channels(k, j);
      out << "block " << k + 1 << ' ' << j + 1 << ' ' << h.rows() << ' ' << h.cols() << '\n';
      write_matrix(out, h);
    }
  }
}

ChannelSet read_channels(std::istream& in) {
  read_header(in, kChannelMagic);
  expect(in, "users");
  const int users = read_int(in);
  if (users < 1 || users > 4096) throw ConfigError("bad user count in channel file");
  std::vector<CMatrix> blocks;
  for (int k = 0; k < users; ++k) {
    for (int j = 0; j < users; ++j) {
      expect(in, "block");
      const int rk = read_int(in);
      const int rj = read_int(in);
      if (rk != k + 1 || rj != j + 1) throw ConfigError("channel blocks out of order");
      const int rows = read_int(in);
      const int cols = read_int(in);
      blocks.push_back(read_matrix(in, rows, cols));
    }
  }
  return ChannelSet(users, std::move(blocks));
}

void write_beamformers(std::ostream& out, const BeamformerSet& bf) {
  out << kBeamMagic << ' ' << kFormatVersion << '\n' << "users " << bf.users() << '\n';
  for (int k = 0; k < bf.users(); ++k) {
    const CMatrix& u = bf.transmit[static_cast<std::size_t>(k)];
    out << "transmit " << k + 1 << ' ' << u.rows() << ' ' << u.cols() << '\n';
    write_matrix(out, u);
  }
  for (int k = 0; k < bf.users(); ++k) {
    const CMatrix& v = bf.receive[static_cast<std::size_t>(k)];
    out << "receive " << k + 1 << ' ' << v.rows() << ' ' << v.cols() << '\n';
    write_matrix(out, v);
  }
}

BeamformerSet read_beamformers(std::istream& in) {
  read_header(in, kBeamMagic);
  expect(in, "users");
  const int users = read_int(in);
  if (users < 1 || users > 4096) throw ConfigError("bad user count in beamformer file");
  BeamformerSet bf;
  for (const char* section : {"transmit", "receive"}) {
    auto& target = std::string(section) == "transmit" ? bf.transmit : bf.receive;
    for (int k = 0; k < users; ++k) {
      expect(in, section);
      if (read_int(in) != k + 1) throw ConfigError("beamformer sections out of order");
      const int rows = read_int(in);
      const int cols = read_int(in);
      target.push_back(read_matrix(in, rows, cols));
    }
  }
  return bf;
}

void save_channels(const std::filesystem::path& path, const ChannelSet& channels) {
  write_file(path, [&](std::ostream& out) { write_channels(out, channels); });
}

ChannelSet load_channels(const std::filesystem::path& path) {
  auto in = open_read(path);
  return read_channels(in);
}

void save_beamformers(const std::filesystem::path& path, const BeamformerSet& beamformers) {
  write_file(path, [&](std::ostream& out) { write_beamformers(out, beamformers); });
}

BeamformerSet load_beamformers(const std::filesystem::path& path) {
  auto in = open_read(path);
  return read_beamformers(in);
}

}  // namespace mimoic
