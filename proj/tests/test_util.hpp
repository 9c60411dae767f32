#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "selboot/bootstrap.hpp"

inline selboot::CountTable lung_counts_S(int id) {
  std::string path = std::string(SELBOOT_TEST_DATA) + "/lung_cluster" + std::to_string(id) + "_S.tsv";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing fixture " + path);
  return selboot::read_count_tsv(in, path);
}

inline selboot::CountTable lung_counts_H(int id) { return selboot::complement(lung_counts_S(id)); }
