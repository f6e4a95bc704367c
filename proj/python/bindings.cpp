// Copyright (c) 2026 The ctxspell Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings: text utilities, the ranker, tag decoding, checkpoint
// loading, the corrector, and the command-line entry point.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>
#include <vector>

#include "ctxspell/checkpoint.hpp"
#include "ctxspell/commands.hpp"
#include "ctxspell/evalbench.hpp"
#include "ctxspell/ranker.hpp"
#include "ctxspell/tagging.hpp"
#include "ctxspell/textcore.hpp"

namespace py = pybind11;

namespace ctxspell {
namespace {

std::vector<Tag> parse_tags(const std::string& s) {
  std::vector<Tag> out;
  for (char c : s) {
    switch (c) {
      case 'O': out.push_back(Tag::O); break;
      case 'B': out.push_back(Tag::B); break;
      case 'I': out.push_back(Tag::I); break;
      case 'L': out.push_back(Tag::L); break;
      default: throw std::invalid_argument(std::string("unknown tag '") + c + "'");
    }
  }
  return out;
}

std::string tags_string(const std::vector<Tag>& tags) {
  std::string out;
  for (Tag t : tags) out.push_back(tag_char(t));
  return out;
}

py::tuple cli(const std::vector<std::string>& args) {
  std::vector<std::string> full{"ctxspell"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace
}  // namespace ctxspell

PYBIND11_MODULE(_ctxspell, m) {
  using namespace ctxspell;
  m.doc() = "Contextual spelling correction of ASR hypotheses against a bias list";

  m.def("normalize", &normalize, py::arg("text"));
  m.def("tokenize", [](const std::string& text, int chunk_size) { return tokenize(text, chunk_size).tokens; },
        py::arg("text"), py::arg("chunk_size") = kDefaultChunkSize, "Chunk tokens of the normalized text.");
  m.def("char_edit_distance", &char_edit_distance, py::arg("a"), py::arg("b"));
  m.def("relevance_weight", &relevance_weight, py::arg("phrase"), py::arg("hypothesis"));

  py::class_<RankedPhrase>(m, "RankedPhrase")
      .def_readonly("phrase", &RankedPhrase::phrase)
      .def_readonly("original_index", &RankedPhrase::original_index)
      .def_readonly("weight", &RankedPhrase::weight)
      .def("__repr__", [](const RankedPhrase& r) {
        return "RankedPhrase(" + r.phrase + ", index=" + std::to_string(r.original_index) +
               ", weight=" + std::to_string(r.weight) + ")";
      });

  m.def(
      "preselect",
      [](const std::vector<std::string>& phrases, const std::string& hypothesis, int k) {
        return preselect(BiasList(phrases), hypothesis, k);
      },
      py::arg("phrases"), py::arg("hypothesis"), py::arg("k"));

  m.def(
      "build_targets",
      [](const std::string& reference, const std::string& hypothesis, std::pair<int, int> name_words,
         const std::vector<std::string>& phrases, bool anti_context) {
        const TagTarget t =
            build_targets(reference, hypothesis, Range{name_words.first, name_words.second}, BiasList(phrases),
                          anti_context);
        return py::make_tuple(tags_string(t.cls), t.cind, t.usable);
      },
      py::arg("reference"), py::arg("hypothesis"), py::arg("name_words"), py::arg("phrases"),
      py::arg("anti_context") = false, "Returns (tags, cind, usable) with tags as a string over OBIL.");

  m.def(
      "decode",
      [](const std::string& hypothesis, const std::string& tags, const std::vector<int>& cind,
         const std::vector<std::string>& phrases) {
        return apply_correction(hypothesis, extract_spans(parse_tags(tags), cind), BiasList(phrases));
      },
      py::arg("hypothesis"), py::arg("tags"), py::arg("cind"), py::arg("phrases"),
      "Applies tag/index sequences to the hypothesis.");

  py::class_<Model<float>>(m, "Model")
      .def_static(
          "load", [](const std::filesystem::path& path) { return load_checkpoint(path); }, py::arg("path"))
      .def_property_readonly("variant", [](const Model<float>& model) { return to_string(model.config().variant); })
      .def_property_readonly("num_parameters",
                             [](const Model<float>& model) { return model.params().scalar_count(); })
      .def(
          "correct",
          [](const Model<float>& model, const std::string& hypothesis, const std::vector<std::string>& phrases, int k,
             double r) {
            if (model.config().uses_acoustics()) {
              throw std::invalid_argument("acoustic models need frames; use the command line with --input");
            }
            CorrectOptions opt;
            opt.k = k;
            opt.r = r;
            InferenceInput input;
            input.hypothesis = hypothesis;
            py::gil_scoped_release release;
            return correct(model, input, BiasList(phrases), opt);
          },
          py::arg("hypothesis"), py::arg("phrases"), py::arg("k") = 3, py::arg("r") = 1.0);

  m.def("cli", &cli, py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");
}
