#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <alarmhmm/errors.hpp>
#include <alarmhmm/model_io.hpp>
#include <alarmhmm/sequence_io.hpp>

using namespace alarmhmm;

TEST(HmmJson, RoundTripsExactly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Hmm m = random_model(1 + seed % 4, 2 + seed % 5, seed);
    const auto doc = hmm_to_json(m);
    EXPECT_EQ(doc.at("format_version"), kModelFormatVersion);
    const auto text = dump_json(doc);
    const Hmm back = hmm_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back, m);
    EXPECT_EQ(dump_json(hmm_to_json(back)), text);
  }
}

TEST(HmmJson, Errors) {
  auto doc = hmm_to_json(Hmm::uniform(2, 3));
  auto missing = doc;
  missing.erase("transition");
  EXPECT_THROW(hmm_from_json(missing), SchemaError);
  auto ragged = doc;
  ragged["emission"][1] = {0.5, 0.5};
  EXPECT_THROW(hmm_from_json(ragged), SchemaError);
  auto text = doc;
  text["initial"] = {"a", "b"};
  EXPECT_THROW(hmm_from_json(text), SchemaError);
  auto invalid = doc;
  invalid["transition"][0] = {0.9, 0.3};
  EXPECT_THROW(hmm_from_json(invalid), InvalidModelError);
  EXPECT_THROW(read_json_file("/nonexistent/model.json"), IoError);
}

TEST(SequenceJsonl, RoundTrip) {
  std::vector<SequenceRecord> recs(2);
  recs[0].sequence = {{3, 1, 4}, {0.5, 1.0, 1.0 / 3 + 1.0}, 2};
  recs[0].meta = {{"split", "train"}, {"seed", 7}};
  recs[1].sequence = {{}, {}, std::nullopt};
  std::stringstream ss;
  write_sequences_jsonl(ss, recs);
  const std::string text = ss.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("\"fault\":null"), std::string::npos);
  EXPECT_NE(text.find("\"format_version\":\"1\""), std::string::npos);
  const auto back = read_sequences_jsonl(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].sequence, recs[0].sequence);
  EXPECT_EQ(back[0].meta, recs[0].meta);
  EXPECT_EQ(back[1].sequence, recs[1].sequence);
}

TEST(SequenceJsonl, ErrorsCarryLineNumbers) {
  std::istringstream bad(
      "{\"fault\":0,\"symbols\":[1],\"times\":[0],\"meta\":{}}\n"
      "{\"fault\":0,\"symbols\":[1,2],\"times\":[0],\"meta\":{}}\n");
  try {
    read_sequences_jsonl(bad);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream garbage("not json\n");
  EXPECT_THROW(read_sequences_jsonl(garbage), SchemaError);
  std::istringstream negative("{\"fault\":-1,\"symbols\":[],\"times\":[]}\n");
  EXPECT_THROW(read_sequences_jsonl(negative), SchemaError);
  std::istringstream dup("{\"fault\":0,\"symbols\":[1,1],\"times\":[0,1]}\n");
  EXPECT_THROW(read_sequences_jsonl(dup), SchemaError);
  std::istringstream future("{\"format_version\":\"2\",\"symbols\":[],\"times\":[]}\n");
  EXPECT_THROW(read_sequences_jsonl(future), SchemaError);
  EXPECT_THROW(read_sequences_jsonl(std::filesystem::path("/nonexistent.jsonl")), IoError);
}
