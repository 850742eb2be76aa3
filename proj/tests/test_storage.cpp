#include <gtest/gtest.h>

#include "mana/storage_model.hpp"

using namespace mana;
using namespace mana::storage;

namespace {

struct Row {
  unsigned partial;
  unsigned index_bits;
  const char* hobpt;
  const char* table;
  const char* sum;
};

// Exact bit arithmetic rendered at two decimals, half-up.
constexpr Row kRows[] = {
    {0, 9, "1.88", "14.5", "16.38"},  {1, 8, "0.91", "14.5", "15.41"}, {2, 7, "0.44", "14.5", "14.94"},
    {5, 5, "0.1", "15", "15.1"},     {8, 3, "0.02", "15.5", "15.52"}, {11, 3, "0.02", "17", "17.02"},
};

}  // namespace

TEST(StorageModel, PartialTagRows) {
  const auto rows = partial_tag_table();
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SCOPED_TRACE(kRows[i].partial);
    EXPECT_EQ(rows[i].partial_tag_bits, kRows[i].partial);
    EXPECT_EQ(rows[i].hobp_index_bits, kRows[i].index_bits);
    EXPECT_EQ(format_kb(rows[i].hobpt_bits), kRows[i].hobpt);
    EXPECT_EQ(format_kb(rows[i].mana_table_bits), kRows[i].table);
    EXPECT_EQ(format_kb(rows[i].sum_bits), kRows[i].sum);
  }
}

TEST(StorageModel, DefaultRowFieldWidths) {
  StorageParams p;
  const auto b = mana_storage_breakdown(p);
  EXPECT_EQ(b.hobp_width, 28u);
  EXPECT_EQ(b.hobpt_entries, 128u);
  EXPECT_EQ(b.entry_bits, 29u);
  EXPECT_EQ(b.hobpt_bits, 3584u);
  EXPECT_EQ(b.mana_table_bits, 118784u);
}

TEST(StorageModel, BitConservation) {
  for (unsigned partial = 0; partial <= 30; ++partial) {
    StorageParams p;
    p.partial_tag_bits = partial;
    const auto b = mana_storage_breakdown(p);
    ASSERT_EQ(b.sum_bits, b.mana_table_bits + b.hobpt_bits);
    ASSERT_EQ(b.mana_table_bits, b.entry_bits * p.table_entries);
    ASSERT_EQ(b.hobpt_bits, b.hobpt_entries * b.hobp_width);
    ASSERT_EQ(b.hobp_width + partial + 10, 40u);
    ASSERT_LE(b.hobp_index_bits, b.hobp_width);
  }
}

TEST(StorageModel, UntabulatedWidthsUseNarrowerMeasurement) {
  StorageParams p;
  p.partial_tag_bits = 3;
  EXPECT_EQ(mana_storage_breakdown(p).hobp_index_bits, 7u);
  p.partial_tag_bits = 30;  // pattern width 0
  EXPECT_EQ(mana_storage_breakdown(p).hobp_index_bits, 0u);
  p.hobp_index_bits = 4;
  p.partial_tag_bits = 2;
  EXPECT_EQ(mana_storage_breakdown(p).hobpt_entries, 16u);
}

TEST(StorageModel, OversizedPartialTagIsInvalidGeometry) {
  StorageParams p;
  p.partial_tag_bits = 99;
  try {
    mana_storage_breakdown(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_geometry);
  }
  p.partial_tag_bits = 31;
  EXPECT_THROW(mana_storage_breakdown(p), Error);
  StorageParams odd;
  odd.table_sets = 1000;
  EXPECT_THROW(mana_storage_breakdown(odd), Error);
}

TEST(RecordSize, PublishedConfigurations) {
  EXPECT_EQ(record_size_bits(RecordKind::rdip_miss_table_entry), 166u);
  EXPECT_EQ(record_size_bits(RecordKind::shotgun_ubtb_entry), 105u);
  EXPECT_EQ(record_size_bits(RecordKind::pif_index_plus_history_entry), 92u);
  EXPECT_EQ(record_size_bits(RecordKind::mana_table_entry), 29u);
  EXPECT_EQ(pif_total_bits(), 8192u * 44u + 32768u * 48u);
}

TEST(RecordSize, KindNames) {
  EXPECT_EQ(parse_record_kind("pif_index_plus_history_entry"), RecordKind::pif_index_plus_history_entry);
  try {
    parse_record_kind("btb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unknown_kind);
  }
}

TEST(RecordSize, TracksParameters) {
  RecordParams p;
  p.footprint_bits = 16;
  EXPECT_EQ(record_size_bits(RecordKind::rdip_miss_table_entry, p), 22u + 3u * 56u);
  p = {};
  p.btb_entries = 3000;
  EXPECT_THROW(record_size_bits(RecordKind::shotgun_ubtb_entry, p), Error);
}

TEST(FormatKb, HalfUpTwoDecimals) {
  EXPECT_EQ(format_kb(0), "0");
  EXPECT_EQ(format_kb(8192), "1");
  EXPECT_EQ(format_kb(118784), "14.5");
  EXPECT_EQ(format_kb(3584), "0.44");
  EXPECT_EQ(format_kb(41), "0.01");  // 0.005 rounds up
  EXPECT_EQ(format_kb(40), "0");
}

TEST(StorageRender, TextAndCsv) {
  const auto rows = partial_tag_table();
  const auto text = render_text(rows);
  EXPECT_NE(text.find("0.44 KB"), std::string::npos);
  EXPECT_NE(text.find("14.94 KB"), std::string::npos);
  const auto csv = render_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_NE(csv.find("\n2,7,28,128,29,3584,118784,122368,0.44,14.5,14.94\n"), std::string::npos);
}
