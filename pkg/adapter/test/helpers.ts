/** Await the next line from a readline iterator, failing fast on silence. */
export async function nextLine(
  iterator: AsyncIterator<string>,
  deadlineMs: number,
): Promise<string> {
  let timer: ReturnType<typeof setTimeout> | undefined;
  try {
    const result = await Promise.race([
      iterator.next(),
      new Promise<never>((_, rejectRace) => {
        timer = setTimeout(() => rejectRace(new Error(`no line within ${deadlineMs}ms`)), deadlineMs);
      }),
    ]);
    if (result.done) {
      throw new Error('stream ended early');
    }
    return result.value;
  } finally {
    clearTimeout(timer);
  }
}
