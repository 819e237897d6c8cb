//! Regenerates the parquet datasets under `tests/fixtures/datasets/`.
//!
//! The data is synthetic. Each column lists a fixed set of leading distinct
//! values followed by filler, so the rendered schemas have known examples and
//! exact unique counts.
//!
//!     cargo run -p tabqa-core --example gen_fixtures

use std::collections::HashSet;
use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use arrow_array::builder::StringDictionaryBuilder;
use arrow_array::types::Int32Type;
use arrow_array::{
    ArrayRef, BooleanArray, Float64Array, Int16Array, Int64Array, RecordBatch, StringArray, StructArray,
    TimestampNanosecondArray, UInt16Array, UInt32Array, UInt8Array,
};
use arrow_schema::{DataType, Field};
use chrono::NaiveDate;
use parquet::arrow::ArrowWriter;
use parquet::basic::Compression;
use parquet::file::properties::WriterProperties;

/// `firsts` followed by `filler(i)` values not already present, `n` in total.
fn distinct<T: Clone + PartialEq>(firsts: &[T], n: usize, filler: impl Fn(usize) -> T) -> Vec<T> {
    let mut out: Vec<T> = firsts.to_vec();
    let mut i = 0;
    while out.len() < n {
        let v = filler(i);
        i += 1;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out.truncate(n);
    out
}

fn distinct_ints(firsts: &[i64], n: usize, start: i64) -> Vec<i64> {
    let seen: HashSet<i64> = firsts.iter().copied().collect();
    let mut out = firsts.to_vec();
    let mut next = start;
    while out.len() < n {
        if !seen.contains(&next) {
            out.push(next);
        }
        next += 1;
    }
    out
}

fn cycle<T: Clone>(values: &[T], rows: usize) -> Vec<T> {
    (0..rows).map(|r| values[r % values.len()].clone()).collect()
}

/// Like [`cycle`] but with nulls on rows where `null_row(r)` holds.
fn cycle_with_nulls<T: Clone>(values: &[T], rows: usize, null_row: impl Fn(usize) -> bool) -> Vec<Option<T>> {
    let mut k = 0;
    (0..rows)
        .map(|r| {
            if null_row(r) {
                None
            } else {
                let v = values[k % values.len()].clone();
                k += 1;
                Some(v)
            }
        })
        .collect()
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn category(values: Vec<Option<String>>) -> ArrayRef {
    let mut b = StringDictionaryBuilder::<Int32Type>::new();
    for v in values {
        match v {
            Some(s) => {
                b.append_value(s);
            }
            None => b.append_null(),
        }
    }
    Arc::new(b.finish())
}

fn category_cycle(values: &[String], rows: usize) -> ArrayRef {
    category(cycle(values, rows).into_iter().map(Some).collect())
}

fn uints<T>(values: &[i64], rows: usize) -> Vec<T>
where
    T: TryFrom<i64>,
    <T as TryFrom<i64>>::Error: std::fmt::Debug,
{
    cycle(values, rows).into_iter().map(|v| T::try_from(v).expect("value fits column type")).collect()
}

fn floats(firsts: &[f64], n: usize, scale: f64, rows: usize) -> ArrayRef {
    let vals = distinct(firsts, n, |i| i as f64 / scale);
    Arc::new(Float64Array::from(cycle(&vals, rows)))
}

fn write(path: &Path, columns: Vec<(&str, ArrayRef)>) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    let batch = RecordBatch::try_from_iter(columns).unwrap();
    let props = WriterProperties::builder().set_compression(Compression::SNAPPY).build();
    let mut w = ArrowWriter::try_new(File::create(path).unwrap(), batch.schema(), Some(props)).unwrap();
    w.write(&batch).unwrap();
    w.close().unwrap();
    println!("wrote {} ({} rows)", path.display(), batch.num_rows());
}

fn trip_advisor(root: &Path) {
    const ROWS: usize = 20_000;

    let rating_fields = ["service", "cleanliness", "overall", "value", "location", "sleep_quality", "rooms"];
    let start = [5u32, 5, 5, 4, 5, 5, 4];
    let mut rating_cols: Vec<Vec<f64>> = vec![Vec::with_capacity(ROWS); rating_fields.len()];
    for r in 0..ROWS {
        let mut k = (r % 5530) as u32;
        for (j, col) in rating_cols.iter_mut().enumerate() {
            let digit = k % 5;
            k /= 5;
            col.push(((start[j] - 1 + digit) % 5 + 1) as f64);
        }
    }
    let ratings = StructArray::from(
        rating_fields
            .iter()
            .zip(rating_cols)
            .map(|(name, vals)| {
                (Arc::new(Field::new(*name, DataType::Float64, true)), Arc::new(Float64Array::from(vals)) as ArrayRef)
            })
            .collect::<Vec<_>>(),
    );

    let titles = distinct(
        &strs(&["``Very nice experience for a country boy going to town''"]),
        17_747,
        |i| format!("Review title number {i} describing a recent hotel stay"),
    );

    let first_text = "Being from a small town in Tennessee, I was very unsure of what to expect from the large city \
                      hotel, but the staff made us feel at home.";
    let texts = distinct(&[first_text.to_string()], ROWS, |i| format!("Review body {i}."));

    let n_authors = 17_995;
    let mut usernames = Vec::with_capacity(ROWS);
    let mut num_reviews = Vec::with_capacity(ROWS);
    let mut author_ids = Vec::with_capacity(ROWS);
    let mut locations = Vec::with_capacity(ROWS);
    for r in 0..ROWS {
        let k = r % n_authors;
        if k == 0 {
            usernames.push("Tucker124".to_string());
            num_reviews.push(1i64);
            author_ids.push("39AA7B174D045F1E2BAE8A398D00BBC2".to_string());
            locations.push("Memphis, Tennessee".to_string());
        } else {
            usernames.push(format!("traveller{k}"));
            num_reviews.push((k % 50) as i64);
            author_ids.push(format!("{:032X}", k));
            locations.push(format!("City {}", k % 900));
        }
    }
    let author = StructArray::from(vec![
        (Arc::new(Field::new("username", DataType::Utf8, true)), Arc::new(StringArray::from(usernames)) as ArrayRef),
        (Arc::new(Field::new("num_reviews", DataType::Int64, true)), Arc::new(Int64Array::from(num_reviews)) as ArrayRef),
        (Arc::new(Field::new("id", DataType::Utf8, true)), Arc::new(StringArray::from(author_ids)) as ArrayRef),
        (Arc::new(Field::new("location", DataType::Utf8, true)), Arc::new(StringArray::from(locations)) as ArrayRef),
    ]);

    const MONTHS: [&str; 12] = [
        "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
        "December",
    ];
    let stayed = distinct(
        &strs(&[
            "October 2010",
            "October 2009",
            "September 2007",
            "February 2012",
            "Stay month not recorded by the booking platform",
        ]),
        121,
        |i| format!("{} {}", MONTHS[i % 12], 2000 + i / 12),
    );

    let offering = distinct_ints(&[111_492, 108_562, 94_354, 98_798, 93_889], 2651, 80_000);
    let votes = distinct_ints(&[2, 0, 1, 3, 5], 40, 0);
    let epoch = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let day_nanos = |d: NaiveDate| (d - NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days() * 86_400_000_000_000;
    let date_firsts: Vec<i64> = [(2010, 10, 25), (2009, 10, 14), (2007, 10, 20)]
        .iter()
        .map(|&(y, m, d)| day_nanos(NaiveDate::from_ymd_opt(y, m, d).unwrap()))
        .collect();
    let dates = distinct(&date_firsts, 3082, |i| day_nanos(epoch + chrono::Days::new(i as u64)));
    let ids = distinct_ints(&[84_800_976, 46_861_760, 10_172_355, 124_329_781, 69_904_714], ROWS, 1_000_000);
    let mobile: Vec<bool> = (0..ROWS).map(|r| r % 7 == 1).collect();

    write(
        &root.join("067_TripAdvisor/all.parquet"),
        vec![
            ("ratings", Arc::new(ratings) as ArrayRef),
            ("title", category_cycle(&titles, ROWS)),
            ("text", Arc::new(StringArray::from(texts))),
            ("author", Arc::new(author)),
            ("date_stayed", category_cycle(&stayed, ROWS)),
            ("offering_id", Arc::new(UInt32Array::from(uints::<u32>(&offering, ROWS)))),
            ("num_helpful_votes", Arc::new(UInt8Array::from(uints::<u8>(&votes, ROWS)))),
            (
                "date",
                Arc::new(TimestampNanosecondArray::from(cycle(&dates, ROWS)).with_timezone("UTC")),
            ),
            ("id", Arc::new(UInt32Array::from(uints::<u32>(&ids, ROWS)))),
            ("via_mobile", Arc::new(BooleanArray::from(mobile))),
        ],
    );
}

fn taxonomy(root: &Path) {
    const ROWS: usize = 710;
    let unique_ids: Vec<f64> =
        distinct(&[150.0, 151.0, 179.0, 181.0, 153.0], 672, |i| 1000.0 + i as f64);
    let parents: Vec<String> = distinct_ints(&[150, 1, 2, 37, 16], 85, 1).iter().map(i64::to_string).collect();
    let names = distinct(
        &strs(&[
            "Attractions",
            "Amusement and Theme Parks",
            "Bars & Restaurants",
            "Consumer Electronics Repair and Maintenance",
        ]),
        703,
        |i| format!("Category {i}"),
    );
    let tier1 = distinct(
        &strs(&[
            "Attractions",
            "Automotive",
            "Books and Literature",
            "Business and Finance",
            "Careers, Education and Professional Development",
        ]),
        40,
        |i| format!("Top level {i}"),
    );
    let tier2 = distinct(
        &strs(&[
            "Amusement and Theme Parks",
            "Bars & Restaurants",
            "Casinos & Gambling",
            "Historic Site and Landmark Tours and Visits",
        ]),
        347,
        |i| format!("Second level {i}"),
    );
    let tier3 = distinct(
        &strs(&["Commercial Trucks", "Convertible", "Coupe", "Crossover", "Hatchback"]),
        256,
        |i| format!("Third level {i}"),
    );
    let tier4 = distinct(
        &strs(&[
            "Angel Investment",
            "Bankruptcy",
            "Business Loans",
            "Debt Factoring & Invoice Discounting",
            "Mergers and Acquisitions",
        ]),
        60,
        |i| format!("Fourth level {i}"),
    );
    let sparse = |r: usize| r % 3 == 2;

    write(
        &root.join("069_Taxonomy/all.parquet"),
        vec![
            ("Unique ID", Arc::new(Float64Array::from(cycle(&unique_ids, ROWS))) as ArrayRef),
            ("Parent", category_cycle(&parents, ROWS)),
            ("Name", category_cycle(&names, ROWS)),
            ("Tier 1", category_cycle(&tier1, ROWS)),
            ("Tier 2", category(cycle_with_nulls(&tier2, ROWS, |r| r % 5 == 4))),
            ("Tier 3", category(cycle_with_nulls(&tier3, ROWS, sparse))),
            ("Tier 4", category(cycle_with_nulls(&tier4, ROWS, sparse))),
            ("Unnamed: 7", category(cycle_with_nulls(&strs(&["SCD"]), ROWS, |r| r % 2 == 1))),
        ],
    );
}

fn nba(root: &Path) {
    const ROWS: usize = 2600;
    let years = distinct(
        &strs(&["2012-13", "2013-14", "2014-15", "2015-16", "2016-17"]),
        12,
        |i| format!("{}-{:02}", 2000 + i, (i + 1) % 100),
    );
    let players = distinct(
        &strs(&["Kevin Durant", "Kobe Bryant", "LeBron James", "James Harden", "Carmelo Anthony"]),
        1568,
        |i| format!("Player {i}"),
    );
    let teams = distinct(
        &strs(&["OKC", "LAL", "MIA", "HOU", "NYK"]),
        31,
        |i| ["ATL", "BOS", "BKN", "CHA", "CHI", "CLE", "DAL", "DEN", "DET", "GSW", "IND", "LAC", "MEM", "MIL", "MIN",
             "NOP", "ORL", "PHI", "PHX", "POR", "SAC", "SAS", "TOR", "UTA", "WAS", "NOH", "NJN", "SEA"][i]
            .to_string(),
    );
    let u16col = |firsts: &[i64], n: usize, start: i64| -> ArrayRef {
        Arc::new(UInt16Array::from(uints::<u16>(&distinct_ints(firsts, n, start), ROWS)))
    };
    let u8col = |firsts: &[i64], n: usize| -> ArrayRef {
        Arc::new(UInt8Array::from(uints::<u8>(&distinct_ints(firsts, n, 0), ROWS)))
    };
    let u32col = |firsts: &[i64], n: usize, start: i64| -> ArrayRef {
        Arc::new(UInt32Array::from(uints::<u32>(&distinct_ints(firsts, n, start), ROWS)))
    };

    let columns: Vec<(&str, ArrayRef)> = vec![
        ("YEAR", category_cycle(&years, ROWS)),
        ("Season_type", category_cycle(&strs(&["Regular"]), ROWS)),
        ("PLAYER_ID", u32col(&[201_142, 977, 2544, 201_935, 2546], 1572, 300_000)),
        ("RANK", u16col(&[1, 2, 3, 4, 5], 546, 1)),
        ("PLAYER", category_cycle(&players, ROWS)),
        (
            "TEAM_ID",
            u32col(&[1_610_612_760, 1_610_612_747, 1_610_612_748, 1_610_612_745, 1_610_612_752], 30, 1_610_612_737),
        ),
        ("TEAM", category_cycle(&teams, ROWS)),
        ("GP", u8col(&[81, 78, 76, 67, 82], 84)),
        ("MIN", u16col(&[3119, 3013, 2877, 2985, 2482], 2474, 0)),
        ("FGM", u16col(&[731, 738, 765, 585, 669], 697, 0)),
        ("FGA", u16col(&[1433, 1595, 1354, 1337, 1489], 1263, 0)),
        ("FG_PCT", floats(&[0.51, 0.463, 0.565, 0.438, 0.449], 500, 1000.0, ROWS)),
        ("FG3M", u16col(&[139, 132, 103, 179, 157], 274, 0)),
        ("FG3A", u16col(&[334, 407, 254, 486, 414], 598, 0)),
        ("FG3_PCT", floats(&[0.416, 0.324, 0.406, 0.368, 0.379], 386, 1000.0, ROWS)),
        ("FTM", u16col(&[679, 525, 403, 674, 425], 447, 0)),
        ("FTA", u16col(&[750, 626, 535, 792, 512], 541, 0)),
        ("FT_PCT", floats(&[0.905, 0.839, 0.753, 0.851, 0.83], 552, 1000.0, ROWS)),
        ("OREB", u16col(&[46, 66, 97, 62, 134], 292, 0)),
        ("DREB", u16col(&[594, 367, 513, 317, 326], 616, 0)),
        ("REB", u16col(&[640, 433, 610, 379, 460], 774, 0)),
        ("AST", u16col(&[374, 469, 551, 455, 171], 573, 0)),
        ("STL", u8col(&[116, 106, 129, 142, 52], 165)),
        ("BLK", u16col(&[105, 25, 67, 38, 32], 181, 0)),
        ("TOV", u16col(&[280, 287, 226, 295, 175], 296, 0)),
        ("PF", u16col(&[143, 173, 110, 178, 205], 276, 0)),
        ("PTS", u16col(&[2280, 2133, 2036, 2023, 1920], 1539, 0)),
        (
            "EFF",
            Arc::new(Int16Array::from(uints::<i16>(&distinct_ints(&[2462, 1921, 2446, 1872, 1553], 1674, -100), ROWS))),
        ),
        ("AST_TOV", floats(&[1.34, 1.63, 2.44, 1.54, 0.98], 470, 100.0, ROWS)),
        ("STL_TOV", floats(&[0.41, 0.37, 0.57, 0.48, 0.3], 236, 100.0, ROWS)),
    ];
    let sample: Vec<(&str, ArrayRef)> = columns.iter().map(|(n, a)| (*n, a.slice(40, 20))).collect();
    write(&root.join("076_NBA/all.parquet"), columns);
    write(&root.join("076_NBA/sample.parquet"), sample);
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/datasets");
    trip_advisor(&root);
    taxonomy(&root);
    nba(&root);
}
