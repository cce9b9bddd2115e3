#ifndef XADAPT_MODEL_IO_HPP
#define XADAPT_MODEL_IO_HPP

#include <string>

#include "xadapt/adapt.hpp"
#include "xadapt/backend.hpp"

namespace xadapt {

/*
  Model container, shared by every trained artifact:

    XADAPT-MODEL v1\n
    role <source|adda|dat|lda|plda>\n
    <role-specific sections>

  Dimensions and counts are ASCII lines; parameter arrays follow as raw
  little-endian 64-bit floats terminated by a newline, so round-trips are
  bit-exact. An MLP section is

    mlp <num_layers>\n
    layer <out> <in> <relu|identity>\n
    <out*in weight doubles><out bias doubles>\n      (per layer)
*/

// "source", "adda", "dat", "lda" or "plda"; DataFormatError otherwise.
std::string peek_model_role(const std::string &path);

void save_source_model(const SourceModel &m, const std::string &path);
SourceModel load_source_model(const std::string &path);

void save_adda_model(const AddaModel &m, const std::string &path);
AddaModel load_adda_model(const std::string &path);

void save_dat_model(const DatModel &m, const std::string &path);
DatModel load_dat_model(const std::string &path);

void save_lda(const LdaTransform &t, const std::string &path);
LdaTransform load_lda(const std::string &path);

void save_plda(const PLDAModel &m, const std::string &path);
PLDAModel load_plda(const std::string &path);

}  // namespace xadapt

#endif  // XADAPT_MODEL_IO_HPP
