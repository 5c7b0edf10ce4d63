#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "formfind/amortizer.hpp"
#include "formfind/errors.hpp"

namespace formfind {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& doc, const char* what) {
  if (!doc.is_array()) throw InvalidArgument(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(doc.size()));
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_number()) throw InvalidArgument(std::string(what) + " must hold numbers");
    v(static_cast<Eigen::Index>(i)) = doc[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const json& doc, Eigen::Index rows, Eigen::Index cols) {
  if (!doc.is_array() || static_cast<Eigen::Index>(doc.size()) != rows) {
    throw InvalidArgument("weight matrix has the wrong number of rows");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = vector_from_json(doc[static_cast<std::size_t>(r)], "weight row");
    if (row.size() != cols) throw InvalidArgument("weight matrix has the wrong number of columns");
    m.row(r) = row.transpose();
  }
  return m;
}

json spec_to_json(const MlpSpec& spec) {
  return {{"layer_sizes", spec.layer_sizes},
          {"hidden", to_string(spec.hidden)},
          {"output", to_string(spec.output)}};
}

MlpSpec spec_from_json(const json& doc) {
  MlpSpec spec;
  spec.layer_sizes = doc.at("layer_sizes").get<std::vector<int>>();
  spec.hidden = activation_from_string(doc.at("hidden").get<std::string>());
  spec.output = activation_from_string(doc.at("output").get<std::string>());
  spec.validate();
  return spec;
}

json layers_to_json(const Mlp& mlp) {
  json layers = json::array();
  for (const auto& l : mlp.layers()) {
    layers.push_back({{"w", matrix_to_json(l.weight)}, {"b", vector_to_json(l.bias)}});
  }
  return layers;
}

Mlp mlp_from_json(const json& spec_doc, const json& layers_doc) {
  MlpSpec spec = spec_from_json(spec_doc);
  if (!layers_doc.is_array() || layers_doc.size() + 1 != spec.layer_sizes.size()) {
    throw InvalidArgument("layer count does not match the spec");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < layers_doc.size(); ++i) {
    const auto in = spec.layer_sizes[i];
    const auto out = spec.layer_sizes[i + 1];
    DenseLayer l;
    l.weight = matrix_from_json(layers_doc[i].at("w"), out, in);
    l.bias = vector_from_json(layers_doc[i].at("b"), "bias");
    if (l.bias.size() != out) throw InvalidArgument("bias has the wrong length");
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(spec), std::move(layers));
}

}  // namespace

json model_to_json(const AmortizerModel& model) {
  json doc = {{"version", kModelFormatVersion},
              {"kind", to_string(model.kind)},
              {"task", model.task},
              {"spec", spec_to_json(model.encoder.spec())},
              {"signs", vector_to_json(model.head.signs)},
              {"shift", model.head.shift},
              {"layers", layers_to_json(model.encoder)},
              {"meta", model.meta}};
  if (model.decoder) {
    doc["decoder"] = {{"spec", spec_to_json(model.decoder->spec())},
                      {"layers", layers_to_json(*model.decoder)}};
  }
  return doc;
}

AmortizerModel model_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidArgument("model document must be an object");
  if (!doc.contains("version")) throw InvalidArgument("model document has no version field");
  if (doc.at("version").get<int>() != kModelFormatVersion) {
    throw InvalidArgument("unsupported model format version");
  }
  try {
    AmortizerModel model;
    model.kind = model_kind_from_string(doc.at("kind").get<std::string>());
    model.task = doc.at("task");
    model.encoder = mlp_from_json(doc.at("spec"), doc.at("layers"));
    model.head.signs = vector_from_json(doc.at("signs"), "signs");
    model.head.shift = doc.at("shift").get<double>();
    model.meta = doc.value("meta", json::object());
    if (model.head.signs.size() != model.encoder.output_size()) {
      throw InvalidArgument("sign vector does not match the encoder output");
    }
    const bool has_decoder = doc.contains("decoder");
    if (has_decoder != (model.kind != ModelKind::ours)) {
      throw InvalidArgument("decoder block must be present exactly for nn/pinn models");
    }
    if (has_decoder) {
      model.decoder =
          mlp_from_json(doc.at("decoder").at("spec"), doc.at("decoder").at("layers"));
    }
    return model;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const AmortizerModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out << model_to_json(model).dump() << '\n';
}

AmortizerModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("model file '" + path + "' not found");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidArgument("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace formfind
