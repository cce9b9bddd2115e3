#include "xadapt/model_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "xadapt/error.hpp"

namespace xadapt {

namespace {

constexpr const char *kMagic = "XADAPT-MODEL v1";

void write_doubles_le(std::ostream &os, const double *v, size_t n) {
  std::vector<unsigned char> buf(n * 8);
  for (size_t i = 0; i < n; ++i) {
    uint64_t bits;
    std::memcpy(&bits, &v[i], 8);
    for (int b = 0; b < 8; ++b)
      buf[i * 8 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
  }
  os.write(reinterpret_cast<const char *>(buf.data()),
           static_cast<std::streamsize>(buf.size()));
  os.put('\n');
}

void read_doubles_le(std::istream &is, double *v, size_t n, const std::string &path) {
  std::vector<unsigned char> buf(n * 8);
  is.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<size_t>(is.gcount()) != buf.size())
    throw DataFormatError(path + ": truncated parameter block");
  for (size_t i = 0; i < n; ++i) {
    uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<uint64_t>(buf[i * 8 + b]) << (8 * b);
    std::memcpy(&v[i], &bits, 8);
  }
  if (is.get() != '\n')
    throw DataFormatError(path + ": missing newline after parameter block");
}

std::string read_line(std::istream &is, const std::string &path) {
  std::string line;
  if (!std::getline(is, line))
    throw DataFormatError(path + ": unexpected end of model file");
  return line;
}

void expect_line(std::istream &is, const std::string &want, const std::string &path) {
  const std::string got = read_line(is, path);
  if (got != want)
    throw DataFormatError(path + ": expected '" + want + "', got '" + got + "'");
}

void write_mlp(std::ostream &os, const MLPEncoder &enc) {
  os << "mlp " << enc.num_layers() << '\n';
  for (const Layer &layer : enc.layers()) {
    os << "layer " << layer.weight.rows() << ' ' << layer.weight.cols() << ' '
       << (layer.activation == Activation::kRelu ? "relu" : "identity") << '\n';
    write_doubles_le(os, layer.weight.data(), layer.weight.size());
    write_doubles_le(os, layer.bias.data(), layer.bias.size());
  }
}

MLPEncoder read_mlp(std::istream &is, const std::string &path) {
  std::istringstream head(read_line(is, path));
  std::string tag;
  int num_layers = 0;
  if (!(head >> tag >> num_layers) || tag != "mlp" || num_layers < 1)
    throw DataFormatError(path + ": bad mlp section header");
  std::vector<int> dims;
  std::vector<Activation> acts;
  std::vector<Layer> layers;
  for (int l = 0; l < num_layers; ++l) {
    std::istringstream lh(read_line(is, path));
    std::string ltag, act;
    int out = 0, in = 0;
    if (!(lh >> ltag >> out >> in >> act) || ltag != "layer" || out < 1 || in < 1)
      throw DataFormatError(path + ": bad layer header");
    Layer layer;
    layer.weight = Matrix(out, in);
    layer.bias.assign(out, 0.0);
    if (act == "relu")
      layer.activation = Activation::kRelu;
    else if (act == "identity")
      layer.activation = Activation::kIdentity;
    else
      throw DataFormatError(path + ": unknown activation '" + act + "'");
    read_doubles_le(is, layer.weight.data(), layer.weight.size(), path);
    read_doubles_le(is, layer.bias.data(), layer.bias.size(), path);
    if (!layers.empty() && layers.back().weight.rows() != in)
      throw DataFormatError(path + ": layer dimensions do not chain");
    layers.push_back(std::move(layer));
  }
  // Rebuild through make() shape checks by assembling dims.
  dims.push_back(layers.front().weight.cols());
  for (const Layer &l : layers) {
    dims.push_back(l.weight.rows());
    acts.push_back(l.activation);
  }
  Rng dummy(0);
  MLPEncoder enc = MLPEncoder::make(dims, acts, dummy);
  enc.layers() = std::move(layers);
  return enc;
}

void write_speakers(std::ostream &os, const std::vector<std::string> &speakers) {
  os << "speakers " << speakers.size() << '\n';
  for (const std::string &s : speakers) os << s << '\n';
}

std::vector<std::string> read_speakers(std::istream &is, const std::string &path) {
  std::istringstream head(read_line(is, path));
  std::string tag;
  int count = 0;
  if (!(head >> tag >> count) || tag != "speakers" || count < 0)
    throw DataFormatError(path + ": bad speakers section");
  std::vector<std::string> speakers(count);
  for (int i = 0; i < count; ++i) speakers[i] = read_line(is, path);
  return speakers;
}

std::ofstream open_out(const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataFormatError("cannot write '" + path + "'");
  return os;
}

std::ifstream open_in(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataFormatError("cannot open '" + path + "'");
  return is;
}

std::string read_role(std::istream &is, const std::string &path) {
  expect_line(is, kMagic, path);
  const std::string role_line = read_line(is, path);
  if (role_line.rfind("role ", 0) != 0)
    throw DataFormatError(path + ": missing role line");
  return role_line.substr(5);
}

void check_role(std::istream &is, const std::string &want, const std::string &path) {
  const std::string got = read_role(is, path);
  if (got != want)
    throw DataFormatError(path + ": expected role '" + want + "', got '" + got + "'");
}

}  // namespace

std::string peek_model_role(const std::string &path) {
  std::ifstream is = open_in(path);
  return read_role(is, path);
}

void save_source_model(const SourceModel &m, const std::string &path) {
  std::ofstream os = open_out(path);
  os << kMagic << "\nrole source\n";
  write_speakers(os, m.speakers);
  write_mlp(os, m.encoder);
  write_mlp(os, m.classifier.net);
  if (!os) throw DataFormatError("write failed for '" + path + "'");
}

SourceModel load_source_model(const std::string &path) {
  std::ifstream is = open_in(path);
  check_role(is, "source", path);
  SourceModel m;
  m.speakers = read_speakers(is, path);
  m.encoder = read_mlp(is, path);
  m.classifier.net = read_mlp(is, path);
  if (m.classifier.net.output_dim() != static_cast<int>(m.speakers.size()))
    throw DataFormatError(path + ": classifier width does not match vocabulary");
  return m;
}

void save_adda_model(const AddaModel &m, const std::string &path) {
  std::ofstream os = open_out(path);
  os << kMagic << "\nrole adda\n";
  write_speakers(os, m.source.speakers);
  write_mlp(os, m.source.encoder);
  write_mlp(os, m.source.classifier.net);
  write_mlp(os, m.target_encoder);
  write_mlp(os, m.discriminator.net);
  if (!os) throw DataFormatError("write failed for '" + path + "'");
}

AddaModel load_adda_model(const std::string &path) {
  std::ifstream is = open_in(path);
  check_role(is, "adda", path);
  AddaModel m;
  m.source.speakers = read_speakers(is, path);
  m.source.encoder = read_mlp(is, path);
  m.source.classifier.net = read_mlp(is, path);
  m.target_encoder = read_mlp(is, path);
  m.discriminator.net = read_mlp(is, path);
  if (!m.target_encoder.same_shape(m.source.encoder))
    throw DataFormatError(path + ": target encoder shape differs from source");
  return m;
}

void save_dat_model(const DatModel &m, const std::string &path) {
  std::ofstream os = open_out(path);
  os << kMagic << "\nrole dat\n";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", m.lambda);
  os << "lambda " << buf << '\n';
  write_speakers(os, m.speakers);
  write_mlp(os, m.shared_encoder);
  write_mlp(os, m.speaker_head.net);
  write_mlp(os, m.domain_head.net);
  if (!os) throw DataFormatError("write failed for '" + path + "'");
}

DatModel load_dat_model(const std::string &path) {
  std::ifstream is = open_in(path);
  check_role(is, "dat", path);
  DatModel m;
  std::istringstream lh(read_line(is, path));
  std::string tag;
  if (!(lh >> tag >> m.lambda) || tag != "lambda")
    throw DataFormatError(path + ": missing lambda line");
  m.speakers = read_speakers(is, path);
  m.shared_encoder = read_mlp(is, path);
  m.speaker_head.net = read_mlp(is, path);
  m.domain_head.net = read_mlp(is, path);
  return m;
}

void save_lda(const LdaTransform &t, const std::string &path) {
  std::ofstream os = open_out(path);
  os << kMagic << "\nrole lda\n";
  os << "dims " << t.projection.rows() << ' ' << t.projection.cols() << '\n';
  write_doubles_le(os, t.projection.data(), t.projection.size());
  write_doubles_le(os, t.mean.data(), t.mean.size());
  if (!os) throw DataFormatError("write failed for '" + path + "'");
}

LdaTransform load_lda(const std::string &path) {
  std::ifstream is = open_in(path);
  check_role(is, "lda", path);
  std::istringstream head(read_line(is, path));
  std::string tag;
  int p = 0, d = 0;
  if (!(head >> tag >> p >> d) || tag != "dims" || p < 1 || d < 1)
    throw DataFormatError(path + ": bad lda dims");
  LdaTransform t;
  t.projection = Matrix(p, d);
  t.mean.assign(d, 0.0);
  read_doubles_le(is, t.projection.data(), t.projection.size(), path);
  read_doubles_le(is, t.mean.data(), t.mean.size(), path);
  return t;
}

void save_plda(const PLDAModel &m, const std::string &path) {
  std::ofstream os = open_out(path);
  os << kMagic << "\nrole plda\n";
  os << "dim " << m.dim() << '\n';
  write_doubles_le(os, m.mu().data(), m.mu().size());
  write_doubles_le(os, m.phi_b().data(), m.phi_b().size());
  write_doubles_le(os, m.phi_w().data(), m.phi_w().size());
  if (!os) throw DataFormatError("write failed for '" + path + "'");
}

PLDAModel load_plda(const std::string &path) {
  std::ifstream is = open_in(path);
  check_role(is, "plda", path);
  std::istringstream head(read_line(is, path));
  std::string tag;
  int d = 0;
  if (!(head >> tag >> d) || tag != "dim" || d < 1)
    throw DataFormatError(path + ": bad plda dim");
  std::vector<double> mu(d);
  Matrix phi_b(d, d), phi_w(d, d);
  read_doubles_le(is, mu.data(), mu.size(), path);
  read_doubles_le(is, phi_b.data(), phi_b.size(), path);
  read_doubles_le(is, phi_w.data(), phi_w.size(), path);
  return PLDAModel(std::move(mu), std::move(phi_b), std::move(phi_w));
}

}  // namespace xadapt
