/**
 * Convert referring-expression annotations into a queries.jsonl file.
 *
 * Accepts a JSON array of annotation objects. Recognized fields per entry:
 *   scene_id                          required
 *   description | utterance | query   required, preserved byte-exact
 *   object_name | instance_type | category   required ground-truth category
 *   box | gt_box                      axis-aligned [xmin,ymin,zmin,xmax,ymax,zmax]
 *   object_id | target_id             optional ground-truth instance id
 *
 * Entries without a box are skipped and counted; everything else is an error
 * naming the expected fields.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface ConvertQueriesOptions {
  annotationsPath: string;
  outPath: string;
  limit?: number;
}

export interface QueriesReport {
  written: number;
  skipped_missing_box: number;
}

function firstField(entry: Record<string, unknown>, names: string[]): unknown {
  for (const name of names) {
    if (name in entry && entry[name] !== null && entry[name] !== undefined) return entry[name];
  }
  return undefined;
}

export function convertQueries(options: ConvertQueriesOptions): QueriesReport {
  const raw = JSON.parse(fs.readFileSync(options.annotationsPath, "utf-8"));
  if (!Array.isArray(raw)) {
    throw new Error(
      `${options.annotationsPath}: expected a JSON array of annotations with fields ` +
        "scene_id, description|utterance|query, object_name|instance_type|category, box|gt_box",
    );
  }
  const entries = options.limit !== undefined ? raw.slice(0, options.limit) : raw;

  const lines: string[] = [];
  let skipped = 0;
  entries.forEach((entry: Record<string, unknown>, i: number) => {
    const sceneId = firstField(entry, ["scene_id"]);
    const description = firstField(entry, ["description", "utterance", "query"]);
    const category = firstField(entry, ["object_name", "instance_type", "category"]);
    if (typeof sceneId !== "string" || typeof description !== "string" || typeof category !== "string") {
      throw new Error(
        `${options.annotationsPath}: entry ${i} needs string fields scene_id, ` +
          "description|utterance|query, and object_name|instance_type|category",
      );
    }
    const box = firstField(entry, ["box", "gt_box"]);
    if (box === undefined) {
      skipped += 1;
      return;
    }
    if (!Array.isArray(box) || box.length !== 6 || box.some((v) => typeof v !== "number")) {
      throw new Error(`${options.annotationsPath}: entry ${i} box must be 6 numbers`);
    }
    const record: Record<string, unknown> = {
      scene_id: sceneId,
      query: description, // byte-exact: no trimming or case folding
      gt_box: box,
      gt_category: category,
    };
    const instanceId = firstField(entry, ["object_id", "target_id"]);
    if (typeof instanceId === "number") record.gt_instance_id = instanceId;
    lines.push(JSON.stringify(record));
  });

  fs.mkdirSync(path.dirname(path.resolve(options.outPath)), { recursive: true });
  fs.writeFileSync(options.outPath, lines.map((l) => l + "\n").join(""));
  return { written: lines.length, skipped_missing_box: skipped };
}
