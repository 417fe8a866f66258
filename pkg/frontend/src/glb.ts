/** Minimal glTF binary container reader: header, chunks, node metadata.
 *
 * Rendering goes through three.js; this parser exists so the session can
 * reason about node names and semantic classes without a WebGL context.
 */

const GLB_MAGIC = 0x46546c67;
const CHUNK_JSON = 0x4e4f534a;
const CHUNK_BIN = 0x004e4942;

export interface GltfNode {
  name?: string;
  mesh?: number;
  extras?: { semantic_class?: string } & Record<string, unknown>;
  [key: string]: unknown;
}

export interface GltfDocument {
  asset: { version: string };
  nodes?: GltfNode[];
  meshes?: unknown[];
  scenes?: Array<{ nodes: number[]; extras?: Record<string, unknown> }>;
  [key: string]: unknown;
}

export interface ParsedGlb {
  doc: GltfDocument;
  binary: Uint8Array | null;
}

export function parseGlb(data: ArrayBuffer): ParsedGlb {
  const view = new DataView(data);
  if (data.byteLength < 12) throw new Error("glb too short");
  if (view.getUint32(0, true) !== GLB_MAGIC) throw new Error("bad glb magic");
  if (view.getUint32(4, true) !== 2) throw new Error("unsupported glb version");
  const declared = view.getUint32(8, true);
  if (declared !== data.byteLength) throw new Error("glb length mismatch");
  let offset = 12;
  let doc: GltfDocument | null = null;
  let binary: Uint8Array | null = null;
  while (offset < data.byteLength) {
    const length = view.getUint32(offset, true);
    const type = view.getUint32(offset + 4, true);
    offset += 8;
    const chunk = new Uint8Array(data, offset, length);
    if (type === CHUNK_JSON) {
      doc = JSON.parse(new TextDecoder().decode(chunk)) as GltfDocument;
    } else if (type === CHUNK_BIN) {
      binary = chunk;
    }
    offset += length;
  }
  if (!doc) throw new Error("glb has no JSON chunk");
  return { doc, binary };
}

export function meshNodes(doc: GltfDocument): GltfNode[] {
  return (doc.nodes ?? []).filter((n) => n.mesh !== undefined);
}

export function semanticClassOf(node: GltfNode): string {
  return node.extras?.semantic_class ?? "generic";
}

export function semanticClasses(doc: GltfDocument): string[] {
  const classes = new Set(meshNodes(doc).map(semanticClassOf));
  return [...classes].sort();
}

export function sceneAmbient(doc: GltfDocument): Record<string, unknown> {
  return doc.scenes?.[0]?.extras ?? {};
}
